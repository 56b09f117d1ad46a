use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?} (HxW), found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("insufficient inliers: best model has {found}, need {required}")]
    InsufficientInliers { found: usize, required: usize },

    #[error("point maps to infinity")]
    PointAtInfinity,

    #[error("homography is not invertible (|det| = {0:e})")]
    NotInvertible(f64),

    #[error("homography composition became singular at step {0}")]
    SingularComposition(usize),

    #[error("image too small: {width}x{height}, minimum dimension is {min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("keypoint ({x:.1}, {y:.1}) violates the {margin}-pixel sampling margin")]
    OutOfBounds { x: f64, y: f64, margin: usize },

    #[error("interval mismatch: expected k = {expected}, found k = {found}")]
    IntervalMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("stride mismatch: expected {expected}, found {found}")]
    StrideMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (valid {min}..{max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("decode error in {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("write error for {path}: {message}")]
    Write { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 1,
            Error::Decode { .. } | Error::Write { .. } | Error::Io { .. } => 2,
            _ => 3,
        }
    }
}
