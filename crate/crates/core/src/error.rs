use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range for {count} actions")]
    OutOfRange { index: usize, count: usize },

    /// Malformed image file; `offset` is the byte position where parsing failed.
    #[error("PGM parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Caller broke a shape or precondition contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    /// Failure inside one pipeline stage while evaluating an action.
    #[error("stage `{stage}` failed for action {action}: {source}")]
    Stage {
        stage: &'static str,
        action: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn dataset(msg: impl Into<String>) -> Self {
        Error::Dataset(msg.into())
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str, action: usize) -> Self {
        Error::Stage {
            stage,
            action,
            source: Box::new(self),
        }
    }

    /// True when the root cause is bad user input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::OutOfRange { .. } | Error::Json(_) => true,
            Error::File { source, .. } | Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
