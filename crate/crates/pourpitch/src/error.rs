use std::path::{Path, PathBuf};

use pourpitch_core::Error as CoreError;

pub type AppResult<T> = Result<T, AppError>;

/// Failures surfaced by the command line, split by exit code: input
/// problems exit with 2, analysis failures with 3.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    Input(CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("analysis failed: {0}")]
    Analysis(CoreError),
}

impl AppError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl ToString) -> Self {
        AppError::Format {
            path: path.as_ref().to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Analysis(_) => 3,
            _ => 2,
        }
    }
}

impl From<CoreError> for AppError {
    /// Domain and configuration errors are the caller's fault; everything
    /// else means the recording could not be analyzed.
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) | CoreError::InvalidContainer(_) | CoreError::InvalidConfig(_) => {
                AppError::Input(e)
            }
            _ => AppError::Analysis(e),
        }
    }
}
