use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("element {0} is not in the subgroup P0 (|epsilon| must be 1)")]
    NotInP0(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point outside the open domain: {0}")]
    OutsideDomain(String),

    #[error("singular action: denominator {0:e} vanishes")]
    SingularAction(f64),

    #[error("kernel precondition violated: Re argument {0:e} is not positive")]
    KernelPrecondition(f64),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("quadrature did not reach tolerance on [{lo:e}, {hi:e}] (estimate {err:e})")]
    Quadrature { lo: f64, hi: f64, err: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid current: {0}")]
    InvalidCurrent(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
