use std::path::PathBuf;

use thiserror::Error;

use crate::modality::Modality;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("edge ({0}, {1}) references an unknown user")]
    UnknownUser(u64, u64),

    #[error("self-loop on user {0}")]
    SelfLoop(u64),

    #[error("duplicate post id {0}")]
    DuplicatePost(u64),

    #[error("invalid post {post}: {message}")]
    InvalidPost { post: u64, message: String },

    #[error("need {needed} stranger pairs but only {available} candidates exist (deficit {})", needed - available)]
    InsufficientStrangers { needed: usize, available: usize },

    #[error("both classes are required, got only label {0}")]
    SingleClass(u8),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{modality} modality unavailable for pair ({u}, {v}): {reason}")]
    Unavailable {
        modality: Modality,
        u: u64,
        v: u64,
        reason: &'static str,
    },

    #[error("hashtag {tag:?} violates the popularity filter: {reason}")]
    FilterViolated { tag: String, reason: String },

    #[error("entropy undefined for an all-zero count vector")]
    ZeroCounts,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user-supplied configuration rather than
    /// by the data being processed.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
