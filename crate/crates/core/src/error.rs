use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: row {row}: {msg}")]
    Manifest {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: image is {image_w}x{image_h}, mask is {mask_w}x{mask_h}")]
    DimensionMismatch {
        image_w: usize,
        image_h: usize,
        mask_w: usize,
        mask_h: usize,
    },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("panel key mismatch: {0}")]
    KeyMismatch(String),

    #[error("brute-force matching supports at most {max} intervals in total, got {got}")]
    TooLarge { max: usize, got: usize },

    #[error("training data has a single class ({0})")]
    SingleClass(String),

    #[error("synthetic spec: {0}")]
    Synth(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
