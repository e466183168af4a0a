use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the domain of an operation (group mismatch, point outside
    /// a convex model, invalid weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration would exceed the configured element cap.
    #[error("resource cap exceeded: {what} needs more than {cap} elements")]
    Resource { what: String, cap: usize },

    /// A non-finite value appeared during a run.
    #[error("non-finite value at index {index}: {detail}")]
    Numeric { index: usize, detail: String },

    #[error("linear program failed: {0}")]
    Solver(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(what: impl Into<String>, cap: usize) -> Self {
        Error::Resource {
            what: what.into(),
            cap,
        }
    }
}
