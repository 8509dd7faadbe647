use thiserror::Error;

/// Errors raised by field construction, operators, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} components, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },
    #[error("need at least {needed} snapshots, found {found}")]
    TooFewSnapshots { needed: usize, found: usize },
    #[error("time {time} outside the sampled range [{start}, {end}]")]
    TimeRange { time: f64, start: f64, end: f64 },
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("coverage: {0}")]
    Coverage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
