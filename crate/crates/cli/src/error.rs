use std::path::PathBuf;

use thiserror::Error;

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
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse { path: PathBuf, row: usize, column: String, message: String },
    #[error("{path}: non-finite value at row {row}, column `{column}`")]
    NonFiniteValue { path: PathBuf, row: usize, column: String },
    #[error("{0}: file has no data rows")]
    EmptyFile(PathBuf),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] wmfsel_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for bad usage or input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
