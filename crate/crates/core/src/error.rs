use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expected point count {expected:.3e} exceeds the supported capacity of {limit:.3e}")]
    Capacity { expected: f64, limit: f64 },

    #[error("path-loss exponent alpha = {alpha} must exceed 2 for the interference integral to converge")]
    Divergent { alpha: f64 },

    #[error("closed form is specialized to alpha = 4, got alpha = {alpha}")]
    WrongSpecialization { alpha: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("unknown unit conversion `{from}` -> `{to}`")]
    UnknownUnit { from: String, to: String },

    #[error("malformed config: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
