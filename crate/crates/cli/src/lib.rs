//! Batch runner for the `afp-core` experiments: JSON configs in, JSON
//! reports and CSV tables out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod suite;

pub use config::ExperimentConfig;
pub use error::{exit, LabError, Result};
