//! Error type covering IO, parsing, and core failures.

use std::fmt;

#[derive(Debug)]
pub enum AppError {
    Io(std::io::Error),
    Core(acdepth_core::CoreError),
    /// Parse failure with file context and 1-based line number.
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    /// Malformed binary or text payload.
    Format(String),
    /// Command-line usage problem.
    Usage(String),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Io(e) => write!(f, "io error: {e}"),
            AppError::Core(e) => write!(f, "{e}"),
            AppError::Parse {
                file,
                line,
                message,
            } => write!(f, "{file}:{line}: {message}"),
            AppError::Format(m) => write!(f, "{m}"),
            AppError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

impl From<acdepth_core::CoreError> for AppError {
    fn from(e: acdepth_core::CoreError) -> Self {
        AppError::Core(e)
    }
}

pub type AppResult<T> = Result<T, AppError>;

pub fn parse_err(file: &str, line: usize, message: impl Into<String>) -> AppError {
    AppError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}
