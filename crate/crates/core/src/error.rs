use thiserror::Error;

use crate::codec::DecodeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("key not found")]
    NotFound,
    #[error("membership table full after {kicks} displacements")]
    CapacityExceeded { kicks: usize },
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
    #[error("sketch is sealed; its window has closed")]
    Sealed,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
