use std::fmt;

use eso_core::EsoError;
use thiserror::Error;

/// Parse failure with its position in the input (1-based).
#[derive(Debug, Clone, PartialEq, Error)]
pub struct FormatError {
    pub line: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn at(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(c) => write!(f, "line {}, column {}: {}", self.line, c, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// Errors surfaced by the command-line tool, each with an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Unsupported(_) => 3,
        }
    }

    pub fn input(context: &str, err: impl fmt::Display) -> Self {
        CliError::Input(format!("{context}: {err}"))
    }
}

impl From<EsoError> for CliError {
    fn from(e: EsoError) -> Self {
        match e {
            EsoError::Unsupported { .. } | EsoError::UnsupportedMethod { .. } | EsoError::Capacity { .. } => {
                CliError::Unsupported(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}
