use afp_core::Error as CoreError;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const RESOURCE: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{source_name}: config error at `{path}`: {message}")]
    Config { source_name: String, path: String, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn config(source_name: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config { source_name: source_name.to_string(), path: path.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => exit::VALIDATION,
            LabError::Core(CoreError::Domain(_)) => exit::VALIDATION,
            LabError::Core(CoreError::Resource { .. }) => exit::RESOURCE,
            LabError::Core(CoreError::Numeric { .. } | CoreError::Solver(_)) => exit::NUMERIC,
            LabError::Io { .. } | LabError::Csv(_) => exit::FAILED,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
