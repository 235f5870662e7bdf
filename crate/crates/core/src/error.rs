use thiserror::Error;

/// Errors raised by validation, the linear-algebra kernel and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("eigen-solver failed to converge")]
    EigenNonConvergence,

    #[error("coupling matrix is singular (largest singular value {0:.3e} of the off-diagonal block)")]
    SingularCoupling(f64),

    #[error("power multiplier bracket not found after {0} doublings")]
    BracketNotFound(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
