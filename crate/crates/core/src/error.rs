use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tracking and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model {0} is unreachable: zero predicted probability mass")]
    UnreachableModel(usize),

    #[error("singular {0} matrix")]
    Singular(&'static str),

    #[error("filter divergence: {0}")]
    Divergence(String),

    #[error("no usable measurement")]
    NoUsableMeasurement,

    #[error("position at the array origin has no defined range or angle")]
    OriginPosition,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Trajectory { path: PathBuf, line: u64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure at runtime.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Trajectory { .. } | Error::Json(_) | Error::Csv(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
