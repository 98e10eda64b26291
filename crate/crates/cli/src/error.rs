use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] bvsel_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 for input problems, 2 for numerical failures, 3 for an exceeded budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(bvsel_core::Error::BudgetExceeded { .. }) => 3,
            Self::Core(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
