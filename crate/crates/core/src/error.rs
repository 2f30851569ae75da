//! Error type shared by the numerical modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The inverse Neumann Laplacian only acts on mean-zero data.
    #[error("field has mean {mean:e}; subtract the mean before applying the inverse Neumann Laplacian")]
    NonZeroMean { mean: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("argument {value} lies outside the open interval (-1, 1)")]
    OutOfDomain { value: f64 },

    #[error("the regularized potential needs kappa > 0")]
    KappaZero,

    #[error("the viscous coefficient eps must be > 0 for this quantity")]
    EpsZero,

    #[error("scalar solve did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("barrier safeguard exhausted at t = {t}: max |phi| = {max_abs}")]
    BarrierBreach { t: f64, max_abs: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid field: {0}")]
    InvalidField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
