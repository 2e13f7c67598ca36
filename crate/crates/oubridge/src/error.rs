use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// `Invalid` and `Expr` describe bad input; the remaining variants describe
/// numerical trouble on otherwise valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Invalid(_) | Error::Expr(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
