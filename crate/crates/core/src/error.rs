use std::io;

use thiserror::Error;

/// Errors produced by the solvers, loaders and evaluators in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("loss `{loss}` expects a score of length {expected}, got {found}")]
    Arity {
        loss: String,
        expected: usize,
        found: usize,
    },

    #[error("operation not supported for loss `{loss}`: {reason}")]
    Unsupported { loss: String, reason: String },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("multiclass inner solver did not converge (residual {residual:.3e})")]
    InnerSolver { residual: f64 },

    #[error("iteration budget exhausted after {iterations} iterations (last objective {last_objective})")]
    Budget {
        iterations: usize,
        last_objective: f64,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
