use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("manifest references missing files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFiles(Vec<PathBuf>),

    #[error("filter design: {0}")]
    Design(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cache file: {0}")]
    Cache(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed JSON")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
