use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate image {id}: {width}x{height}")]
    DegenerateImage { id: String, width: u32, height: u32 },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: {0}x{1}x{2} vs {3}x{4}x{5}")]
    DimensionMismatch(u32, u32, u8, u32, u32, u8),

    #[error("duplicate id: {0}")]
    Duplicate(String),

    #[error("predictions reference unknown images: {}", .0.join(", "))]
    UnknownImages(Vec<String>),

    #[error("no successful runs")]
    NoSuccessfulRuns,

    #[error("{partition}: {failed} of {total} images failed to transform")]
    ModifierFailed {
        partition: String,
        failed: usize,
        total: usize,
    },

    #[error("provider failed: {0}")]
    Provider(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
