use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KsvmError {
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON document: {0}")]
    Json(#[from] serde_json::Error),

    /// Something that the design rules out happened anyway.
    #[error("internal error: {0}")]
    Internal(String),
}

impl KsvmError {
    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        KsvmError::Precondition(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KsvmError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = KsvmError> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::KsvmError::Precondition(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
