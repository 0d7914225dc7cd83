//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in term `{term}`")]
    NonFinite { term: String },

    #[error("semantic backend unavailable: {0}. Set `semantic.backend: standin` to use the frozen random test stand-in instead")]
    BackendUnavailable(String),

    #[error("checkpoint error at {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image { path: path.into(), source }
    }

    /// Exit code the CLI maps this error to: configuration and input
    /// problems are 2, runtime failures are 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptyDataset(_) | Error::InvalidInput(_) => 2,
            _ => 1,
        }
    }
}
