use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} of size {size} exceeds the limit {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("invalid sector (a, b) = ({a}, {b}) for {len} sites")]
    InvalidSector { a: usize, b: usize, len: usize },
    #[error("site {site} outside 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("pole: {0}")]
    Pole(String),
    #[error(
        "no transfer-matrix eigenvalue matches at probe {probe} (closest distance {distance:e})"
    )]
    NoMatch { probe: Complex64, distance: f64 },
    #[error("{count} transfer-matrix eigenvalues match after {probes} probes")]
    Degenerate { count: usize, probes: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Core(#[from] su3ff::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;
