use thiserror::Error;

/// Unified error type for all gaugekit operations.
///
/// `Validation` covers malformed inputs (dimension mismatches, broken type
/// invariants, out-of-range parameters); `Numerical` covers runtime failures
/// of iterative algorithms (non-convergence, thresholds exceeded, blow-up).
/// The CLI maps these to exit codes 1 and 2 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
