use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sketch(#[from] lss_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {reason}")]
    Trace { line: u64, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed message at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },
    #[error("topic {0} is closed")]
    Closed(String),
    #[error("worker failed: {0}")]
    Worker(String),
}

impl From<lss_core::DecodeError> for PipelineError {
    fn from(e: lss_core::DecodeError) -> Self {
        Self::Decode {
            offset: e.offset,
            reason: e.reason,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> PipelineError {
    PipelineError::InvalidInput(msg.into())
}
