use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported field power {0} (expected 1, 2 or 3)")]
    UnsupportedPower(u32),

    #[error("unsupported cosine power {0} (expected 1, 2 or 3)")]
    UnsupportedCosPower(u32),

    #[error("dimension mismatch: operator has {operator}, state has {state}")]
    DimensionMismatch { operator: usize, state: usize },

    #[error("propagation step at t={time} failed to reach tolerance after {halvings} halvings (error estimate {estimate:e})")]
    StepFailure {
        time: f64,
        halvings: u32,
        estimate: f64,
    },

    #[error("convergence driver did not settle before Jmax={jmax}: {detail}")]
    NonConvergence { jmax: u32, detail: String },

    #[error("invalid use: {0}")]
    InvalidUse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("forbidden-parity Fourier leakage: j={j} amplitude {amplitude:e} exceeds {threshold:e}")]
    ParityViolation {
        j: usize,
        amplitude: f64,
        threshold: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed csv {path}: {detail}")]
    CsvSchema { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
