use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("failed to encode {path}: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("{path} is not an indexed-color PNG ({found}); convert the annotation to a palette PNG first")]
    NotIndexed { path: PathBuf, found: String },

    #[error("unsupported bit depth in {path}: {depth}")]
    BitDepth { path: PathBuf, depth: String },

    #[error("invalid .flo file {path}: {message}")]
    Flo { path: PathBuf, message: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    Dimensions {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("inpainting hole covers the entire image")]
    HoleCoversImage,

    #[error("objects cover {percent:.1}% of the frame; inpainting the background is ill-posed above 90%")]
    ObjectTooLarge { percent: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("{0}")]
    Manifest(String),

    #[error("insufficient samples for video {video}: need {needed}, have {available}")]
    InsufficientSamples {
        video: String,
        needed: usize,
        available: usize,
    },

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
