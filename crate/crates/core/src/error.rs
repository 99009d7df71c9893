use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {msg} at line {line}")]
    Parse { path: String, line: u64, msg: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("evaluator failed at draw {index}: {msg}")]
    Evaluator { index: usize, msg: String },

    #[error("n impossible under every stage-1 draw")]
    AllImpossible,

    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures caused by the numbers rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Init(_) | Error::Evaluator { .. } | Error::AllImpossible | Error::Domain(_)
        )
    }
}
