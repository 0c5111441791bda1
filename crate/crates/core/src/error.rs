use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("duplicate id {0} in candidate list")]
    DuplicateId(u32),

    #[error("id {id} out of range for {len} vectors")]
    IdOutOfRange { id: u32, len: usize },

    #[error("pop from an empty ordered set")]
    EmptySet,

    #[error("{subsets} subsets exceed the enumeration limit of {limit}")]
    TooManySubsets { subsets: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
