use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A caller broke an operation's contract (wrong dimension, bad action id, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The environment was stepped before a reset or after its episode ended.
    #[error("environment not ready: {0}")]
    EnvState(String),

    /// A network produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Exact analysis would exceed the configured state-space cap.
    #[error("augmented state space has {size} states, cap is {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
