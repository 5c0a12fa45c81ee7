use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum QgfaError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate element {element}: {reason}")]
    Geometry { element: usize, reason: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error(
        "no sign change in bracket [{lo:e}, {hi:e}] (residuals {residual_lo:e}, {residual_hi:e})"
    )]
    Bracket {
        lo: f64,
        hi: f64,
        residual_lo: f64,
        residual_hi: f64,
    },

    #[error("x = {0} lies outside [-1, 1]")]
    Domain(f64),

    #[error("polynomial fit unusable (sup error {sup_error:e})")]
    FitQuality { sup_error: f64 },

    #[error("phase solver stopped after {iterations} iterations with residual {residual:e}")]
    PhaseSolver { iterations: usize, residual: f64 },

    #[error("block encoding: {0}")]
    BlockEncoding(String),

    #[error("deadline exceeded during {0}")]
    Timeout(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QgfaError>;

impl QgfaError {
    pub fn param(msg: impl Into<String>) -> Self {
        QgfaError::Parameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QgfaError::Io {
            path: path.into(),
            source,
        }
    }
}
