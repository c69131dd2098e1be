use std::path::PathBuf;

use thiserror::Error;

/// Everything a command can fail with, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error(transparent)]
    Numeric(#[from] adaptive_boxfilter::Error),

    #[error("maximum deviation {max_abs:e} exceeds tolerance {tolerance:e}")]
    ToleranceExceeded { max_abs: f64, tolerance: f64 },
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const IO: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const TOLERANCE: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Malformed { .. } => exit::IO,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::ToleranceExceeded { .. } => exit::TOLERANCE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
