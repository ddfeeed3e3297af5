use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Kernel(#[from] lut_softmax_core::Error),
    #[error("approximate and exact outputs differ in {0}")]
    LengthMismatch(&'static str),
    #[error("invalid histogram range: need bins >= 1 and lo < hi")]
    InvalidRange,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
