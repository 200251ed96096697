use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// An iterative method ran out of iterations. Carries the best iterate
    /// and the residual history so callers can inspect what happened.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
        history: Vec<f64>,
    },

    #[error("invariant radii undefined: smallness violated ({lhs:.6e} >= {rhs:.6e})")]
    UndefinedRadii { lhs: f64, rhs: f64 },

    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),

    #[error("multiplier bracket not found below {0:e}")]
    Bracket(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
