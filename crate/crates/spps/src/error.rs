use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ParseError;
use crate::problem::Task;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] spps_core::Error),
    #[error("in `{field}`: {source}")]
    Expression {
        field: &'static str,
        source: ParseError,
    },
    #[error("malformed problem file: {message}")]
    Problem { message: String },
    #[error("invalid problem: {message}")]
    Invalid { message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl AppError {
    pub fn invalid(message: impl Into<String>) -> Self {
        AppError::Invalid {
            message: message.into(),
        }
    }

    pub fn task_mismatch(expected: &str, got: &Task) -> Self {
        AppError::invalid(format!(
            "command needs a `{expected}` task, the problem has `{}`",
            got.name()
        ))
    }

    /// The module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.module(),
            _ => "cli",
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.kind(),
            AppError::Expression { source, .. } => source.kind(),
            AppError::Problem { .. } => "malformed_problem",
            AppError::Invalid { .. } => "invalid_problem",
            AppError::Io { .. } => "io",
        }
    }

    pub fn report(&self) -> ErrorJson {
        ErrorJson {
            module: self.module().to_string(),
            kind: self.kind().to_string(),
            message: self.to_string(),
        }
    }
}

/// Machine-readable error printed on stderr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorJson {
    pub module: String,
    pub kind: String,
    pub message: String,
}
