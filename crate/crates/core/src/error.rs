use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("record {record}: {message}")]
    InvalidRecord { record: String, message: String },

    #[error("invalid dependency parse: {0}")]
    InvalidParse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature `{feature}` unavailable for record {record}: {reason}")]
    MissingFeature {
        feature: String,
        record: String,
        reason: String,
    },

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// An internal invariant was violated; never caused by user input.
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidRecord {
            record: record.into(),
            message: message.into(),
        }
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
