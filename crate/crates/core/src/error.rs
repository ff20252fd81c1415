use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the CrossLID toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed NPY file: {0}")]
    Format(String),

    #[error("unsupported array layout: {0}")]
    UnsupportedLayout(String),

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("CSV parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} exceeds the {available} usable reference points")]
    KTooLarge { k: usize, available: usize },

    #[error("invalid neighborhood size k = {0}")]
    InvalidK(usize),

    #[error("batch size {batch_size} exceeds the {available} reference points")]
    BatchTooLarge { batch_size: usize, available: usize },

    #[error("all neighbor distances are zero")]
    AllDistancesZero,

    #[error("class {class} has {have} samples, needs at least {need}")]
    ClassTooSmall {
        class: usize,
        have: usize,
        need: usize,
    },

    #[error("covariance is indefinite (eigenvalue {0:e})")]
    IndefiniteCovariance(f64),

    #[error("row {row} is not a probability distribution")]
    InvalidDistribution { row: usize },

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("metric {metric} is unavailable: {reason}")]
    MetricUnavailable {
        metric: &'static str,
        reason: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
