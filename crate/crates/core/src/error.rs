use std::io;

use thiserror::Error;

/// Errors produced by kle-core.
#[derive(Debug, Error)]
pub enum KleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: element {element}: {reason}")]
    InvalidElement { element: usize, reason: String },

    #[error("invalid mesh: vertex {vertex}: {reason}")]
    InvalidVertex { vertex: usize, reason: String },

    #[error("graph is disconnected: {components} components")]
    Disconnected { components: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KleError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KleError::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = KleError> = std::result::Result<T, E>;
