use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, max residual {residual:e})")]
    NoConvergence {
        sweeps: usize,
        off_norm: f64,
        residual: f64,
    },

    #[error("component {component} has a zero sample eigenvalue; its direction is undefined")]
    AbsentComponent { component: usize },

    #[error("component {component} is invalid for the noise-reduction method (lambda_tilde = {lambda_tilde:e})")]
    InvalidComponent { component: usize, lambda_tilde: f64 },

    #[error("component {requested} out of range (1..={available})")]
    ComponentOutOfRange { requested: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
