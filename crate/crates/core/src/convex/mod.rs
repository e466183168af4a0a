//! Bounded convex models, seminorms, and affine group actions on them.

mod action;
mod model;
mod seminorm;
pub mod vector;

pub use action::{AffineAction, AffineMap, Displacement, GeneratorImage, ValidationReport};
pub use model::{ConvexModel, PROJECTION_SLACK, TAU_MEM};
pub use seminorm::{Norm, Seminorm, SeminormFamily};
