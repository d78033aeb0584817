use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("encoded symbol {0} was already ingested")]
    DuplicateSymbol(usize),

    #[error("encoded symbol index {index} out of range (graph has {count} encoded rows)")]
    InvalidIndex { index: usize, count: usize },

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("bound undefined: {0}")]
    UndefinedBound(String),

    #[error("malformed frame: {0}")]
    Protocol(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("setup failure: {0}")]
    Setup(String),

    #[error("job failure: {0}")]
    JobFailure(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
