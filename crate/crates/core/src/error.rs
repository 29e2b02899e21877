use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported algebra `{0}`")]
    UnsupportedAlgebra(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid gauge field: {0}")]
    InvalidGauge(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("right-hand side has a kernel component of relative size {0:.3e}")]
    Inconsistent(f64),

    #[error("step size {h} exceeds the stability bound {bound}")]
    Unstable { h: f64, bound: f64 },

    #[error("evolution diverged at t = {t}")]
    Diverged { t: f64, last_finite: Box<crate::dynamics::CauchyState> },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
