//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of bounds for {n} points")]
    IndexOutOfBounds { index: usize, n: usize },

    #[error("self-distance query for index {0}")]
    SelfDistance(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no samples recorded for the requested pair")]
    NoData,

    #[error("point {0} duplicates a point already in the tree")]
    Duplicate(usize),

    #[error("point {0} is not in the tree")]
    NotFound(usize),

    #[error("operation on an empty tree")]
    EmptyTree,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
