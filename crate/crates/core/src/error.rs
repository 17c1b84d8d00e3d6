use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("breakpoint sets do not share endpoints: [{a0}, {a1}] vs [{b0}, {b1}]")]
    EndpointMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("fixed-point iteration stopped after {iterations} iterations with increment {increment:e}; try damping theta < 1")]
    NotConverged { iterations: usize, increment: f64 },

    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
