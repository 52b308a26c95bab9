use crate::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point {0} is not in the domain")]
    OutsideDomain(C64),
    #[error("evaluation at the pole {0}")]
    Singular(C64),
    #[error("invalid quadrature request: {0}")]
    Quadrature(String),
    #[error("invalid weight: {0}")]
    Weight(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("degenerate Gram matrix: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("level set at {level:.3e} is not a pair of closed curves; use a larger k")]
    LevelSet { level: f64 },
    #[error("no harmonic term in the family matches the flux (gap {gap:.3e})")]
    FluxMismatch { gap: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors caused by the input (domain, weight, hypotheses) rather than by
    /// the numerics.
    pub fn is_rejection(&self) -> bool {
        !matches!(self, Error::Degenerate(_) | Error::Numerical(_))
    }
}
