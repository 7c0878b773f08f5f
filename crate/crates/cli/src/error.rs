use std::io;

use lss_pipeline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sketch(#[from] lss_core::Error),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}
