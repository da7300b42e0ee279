use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge after {panels} panels \
         (error estimate {estimate:.3e}, tolerance {tolerance:.3e})"
    )]
    NonConvergent {
        panels: usize,
        estimate: f64,
        tolerance: f64,
    },

    #[error("integrand is not integrable at the origin (endpoint order <= -1)")]
    NotIntegrable,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bracket failure: {0}")]
    BracketFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
