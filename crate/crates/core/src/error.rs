use thiserror::Error;

/// Errors raised by the library. Each variant maps to one machine-readable
/// `kind` string used by the CLI error line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value at tick {tick}: {what}")]
    NonFinite { tick: usize, what: String },

    #[error("incompatible artifacts: {0}")]
    Incompatible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Config(_) => "config",
            Error::NonFinite { .. } => "non_finite",
            Error::Incompatible(_) => "incompatible",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Stamps a non-finite error with the tick it occurred at.
    pub fn at_tick(self, tick: usize) -> Self {
        match self {
            Error::NonFinite { what, .. } => Error::NonFinite { tick, what },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
