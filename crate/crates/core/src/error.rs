use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value at coordinate {coordinate} ({context})")]
    NonFinite {
        coordinate: usize,
        context: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("optimizer state has not taken a step yet")]
    NotStarted,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("trace is missing required channel `{0}`")]
    IncompleteTrace(&'static str),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
