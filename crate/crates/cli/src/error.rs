use std::path::PathBuf;

use thiserror::Error;
use wrongway_core::CoreError;

/// Process exit codes. These are a stable contract for scripts.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Io { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::Core(CoreError::Solver(_)) => EXIT_SOLVER,
            CliError::Core(_) | CliError::Config(_) => EXIT_VALIDATION,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
