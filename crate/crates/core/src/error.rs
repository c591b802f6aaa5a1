use thiserror::Error;

/// Errors raised by the numerical and inferential routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("moment of order {order} is undefined for {law}")]
    MomentUndefined { order: u32, law: String },
    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("critical case: phi^-1 = {inv_phi} is within tolerance of varsigma_3 = {varsigma3}")]
    CriticalCase { inv_phi: f64, varsigma3: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
