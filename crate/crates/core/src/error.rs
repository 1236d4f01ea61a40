use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole in {factor} at x = {x}, y = {y}")]
    Pole {
        factor: String,
        x: Complex64,
        y: Complex64,
    },
    #[error("size mismatch: {what} ({left} vs {right})")]
    SizeMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("size limit exceeded: {what} = {size} > {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("logarithm of zero in {0}")]
    ZeroArgument(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("twist continuation failed at step {step} of {steps}: {reason}")]
    ContinuationFailed {
        step: usize,
        steps: usize,
        reason: String,
    },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("all components of the null vector vanish: states share all roots")]
    AllZero,
    #[error("site {site} outside 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn pole(factor: impl Into<String>, x: Complex64, y: Complex64) -> Self {
        Error::Pole {
            factor: factor.into(),
            x,
            y,
        }
    }
}
