use std::path::PathBuf;

use thiserror::Error;

use crate::battery::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV {path}: {message}")]
    Csv { path: PathBuf, message: String },

    /// Two series that must share a time grid do not.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Timestamps are not strictly increasing with the declared spacing.
    #[error("time grid error: {0}")]
    Grid(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible battery action: {0}")]
    InfeasibleAction(Violation),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no peak power contract covers {peak_kw:.3} kW")]
    NoContract { peak_kw: f64 },

    #[error("unknown peak power contract level {0} kVA")]
    UnknownLevel(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("forecast error: {0}")]
    Forecast(String),

    #[error("LP solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, actual })
        }
    }
}
