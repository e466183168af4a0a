//! Følner averaging and approximate fixed points of affine group actions.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`] exact arithmetic for a small catalog of finitely generated
//!   groups, word-metric balls and the length-lex indexing of free groups.
//! * [`folner`] boundary ratios `|γΦ △ Φ| / |Φ|` and constructive Følner
//!   schedules.
//! * [`convex`] bounded convex models, seminorms and affine actions given by
//!   generator images.
//! * [`afp`] Følner averages of orbits, the displacement decomposition and
//!   full averaging runs.
//! * [`reiter`] finitely supported densities on groups, Reiter-type
//!   minimisation, spectral radius estimates and the free group
//!   counterexample.
//! * [`embed`] affine embeddings of compact simplices and boxes into a
//!   truncated `ℓ²`.

pub mod afp;
pub mod convex;
pub mod embed;
mod error;
pub mod folner;
pub mod group;
pub mod reiter;

pub use error::{Error, Result};

/// Resource limits shared by every enumeration in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of group elements any single enumeration may produce.
    pub ball_cap: usize,
}

impl Limits {
    pub const DEFAULT_BALL_CAP: usize = 1_000_000;

    pub fn with_cap(ball_cap: usize) -> Self {
        Limits { ball_cap }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            ball_cap: Self::DEFAULT_BALL_CAP,
        }
    }
}
