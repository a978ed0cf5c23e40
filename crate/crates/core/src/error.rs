use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain declared by its variable.
    #[error("variable `{variable}`: {reason}")]
    Domain { variable: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The request exceeds what an exact method can handle.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("stage `{stage}` has not been run (missing {path})")]
    MissingStage { stage: String, path: PathBuf },

    #[error("stage `{stage}` was produced with config hash {found}, current config hashes to {expected}; rerun it")]
    StaleStage {
        stage: String,
        expected: String,
        found: String,
    },

    #[error("i/o error on {path}: {source}")]
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(variable: &str, reason: impl Into<String>) -> Self {
        Error::Domain {
            variable: variable.to_string(),
            reason: reason.into(),
        }
    }
}
