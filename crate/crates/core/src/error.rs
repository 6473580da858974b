use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point {0} lies on the spectrum")]
    OnSpectrum(String),

    #[error("evaluation at a pole: {0}")]
    Pole(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn no_convergence(msg: impl Into<String>) -> Self {
        Error::NoConvergence(msg.into())
    }

    /// True for failures caused by the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
