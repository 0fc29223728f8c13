use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::{MovieId, UserId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: rating {value} outside 1..=5")]
    RatingOutOfRange {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("{path}:{line}: rating references unknown user {user}")]
    DanglingUser {
        path: PathBuf,
        line: usize,
        user: UserId,
    },

    #[error("{path}:{line}: rating references unknown movie {movie}")]
    DanglingMovie {
        path: PathBuf,
        line: usize,
        movie: MovieId,
    },

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("unknown movie {0}")]
    UnknownMovie(MovieId),

    #[error("empty user set")]
    EmptyUserSet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("model format: {0}")]
    Model(String),

    #[error("leakage detected: {0}")]
    Leakage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
