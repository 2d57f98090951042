use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("grayscale input {path}: color decomposition requires an RGB image")]
    GrayscaleInput { path: PathBuf },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("plane too small: {0}")]
    PlaneTooSmall(String),

    #[error("invalid filter bank: {0}")]
    FilterBank(String),

    #[error("invalid training set: {0}")]
    Training(String),

    #[error("fusion error: {0}")]
    Fusion(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bundle error: {0}")]
    Bundle(String),

    #[error("feature cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
