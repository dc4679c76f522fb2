use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("buffer length {len} does not match {width}x{height}")]
    BufferLength { len: usize, width: usize, height: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("box ({x}, {y}, {w}, {h}) does not fit in a {width}x{height} canvas")]
    BoxOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("box width and height must be >= 1")]
    EmptyBox,

    #[error("target dimensions must be >= 1, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },

    #[error("both masks are empty")]
    BothEmpty,

    #[error("{0} has no instances")]
    NoInstances(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid prediction order: {0}")]
    InvalidOrder(String),

    #[error("invalid instance id {0}")]
    InvalidId(u32),

    #[error("duplicate instance id {0}")]
    DuplicateId(u32),

    #[error("label {0} exceeds 65535")]
    LabelOverflow(u32),

    #[error("{path}: file not found")]
    NotFound { path: PathBuf },

    #[error("{path}: unsupported color type {detail}")]
    UnsupportedColor { path: PathBuf, detail: String },

    #[error("{path}: corrupt or truncated PNG: {detail}")]
    Decode { path: PathBuf, detail: String },

    #[error("{path}: malformed JSON: {detail}")]
    Json { path: PathBuf, detail: String },

    #[error("{path}: record {index}: {detail}")]
    Record {
        path: PathBuf,
        index: usize,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_w: left.0,
            left_h: left.1,
            right_w: right.0,
            right_h: right.1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound { path }
        } else {
            Error::Io { path, source }
        }
    }
}
