use thiserror::Error;

/// Errors produced by the DTS models and pipeline stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid ratio {ratio}: {reason}")]
    InvalidRatio { ratio: f64, reason: &'static str },

    #[error("degenerate Stokes signal: mean {mean} does not exceed noise floor {floor}")]
    DegenerateStokes { mean: f64, floor: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("range violation: round-trip time {round_trip_s:e} s for {length_m} m of fiber exceeds repetition period {period_s:e} s")]
    Range {
        length_m: f64,
        round_trip_s: f64,
        period_s: f64,
    },

    #[error("empty path: {0}")]
    EmptyPath(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by the data rather than by malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFit(_) | Error::DegenerateStokes { .. } | Error::Numeric(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
