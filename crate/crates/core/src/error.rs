use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain `{label}`: {reason}")]
    InvalidDomain { label: String, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("mesh size {target_h} too coarse: only {rings} ring(s), need at least 3")]
    MeshTooCoarse { target_h: f64, rings: usize },

    #[error("mass matrix is not positive definite ({0})")]
    IndefiniteMass(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        eigenvalue: f64,
    },

    #[error("inner solver stagnated at relative residual {0:e}")]
    InnerStagnation(f64),

    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
