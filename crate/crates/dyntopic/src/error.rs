use std::io;
use std::path::{Path, PathBuf};

/// Errors surfaced by the pipeline commands, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Model(#[from] dyntopic_core::Error),
}

impl AppError {
    pub fn input(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        AppError::Input {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// 2 for usage and input problems, 3 for numeric or model failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Model(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
