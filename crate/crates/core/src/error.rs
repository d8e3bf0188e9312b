use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EsoError {
    #[error("invalid sampling spec ({field}): {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("support of {support} sets exceeds the enumeration cap of {cap}; use the Monte-Carlo path")]
    Capacity { support: u128, cap: usize },

    #[error("method `{method}` is not supported for `{kind}` samplings")]
    UnsupportedMethod { method: &'static str, kind: &'static str },

    #[error("formula `{formula}` does not apply: {reason}")]
    Unsupported { formula: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("sampling is not proper: coordinate {0} is never selected")]
    Improper(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver aborted at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, EsoError>;
