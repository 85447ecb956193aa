use thiserror::Error;

/// Errors surfaced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix not positive definite: smallest pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("training diverged at step {step}: |W|_F = {norm:.3e}")]
    Diverged { step: usize, norm: f64 },

    #[error("experiment not stationary: trailing-window drift {drift:.3e} exceeds {limit:.3e}")]
    NotStationary { drift: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
