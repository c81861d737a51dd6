use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const DIVERGED: i32 = 3;
    pub const AUDIT_FAILED: i32 = 4;
    pub const EXPECTATION_UNMET: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("cannot generate scenario: {0}")]
    Generation(String),

    #[error(transparent)]
    Core(#[from] stiefel_sync::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Core(stiefel_sync::Error::Divergence { .. }) => exit::DIVERGED,
            CliError::Parse { .. } | CliError::Validation(_) | CliError::Generation(_) | CliError::Core(_) => {
                exit::INVALID
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
