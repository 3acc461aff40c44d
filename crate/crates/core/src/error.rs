use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caption-contest table row could not be turned into an arm.
    /// `row` is 1-based and counts data rows (the header is row 0).
    #[error("caption csv row {row}: {message}")]
    CaptionRow { row: usize, message: String },

    #[error("arm index {arm} out of range for {n} arms")]
    ArmOutOfRange { arm: usize, n: usize },

    #[error("policy contract violation: {0}")]
    Contract(String),

    #[error("bad policy spec token `{token}`: {message}")]
    PolicySpec { token: String, message: String },

    #[error("unknown epsilon {0}: not among the configured error thresholds")]
    UnknownEpsilon(f64),

    #[error("summary schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by what the caller asked for, as opposed to what happened
    /// while doing it. The CLI maps these to exit code 1.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::PolicySpec { .. } | Error::UnknownEpsilon(_)
        )
    }
}
