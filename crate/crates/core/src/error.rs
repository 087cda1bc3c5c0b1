use std::path::PathBuf;

use thiserror::Error;

use crate::encoder::FlipMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} out of range (1..={max})", max = crate::statevec::MAX_QUBITS)]
    Size(usize),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cannot flip feature {index} with {mode:?}: bit is {bit}")]
    Flip { index: usize, mode: FlipMode, bit: u8 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("{}: row {row}: {message}", path.display())]
    Ingestion {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("explanation error: {0}")]
    Explanation(String),

    #[error("vocabulary mismatch between explanations")]
    VocabularyMismatch,

    #[error("experiment {context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Invariant,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Ingestion { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Corpus(_)
            | Error::Training(_) => ErrorKind::Data,
            Error::Invariant(_) => ErrorKind::Invariant,
            Error::Experiment { source, .. } => source.kind(),
            _ => ErrorKind::Usage,
        }
    }

    pub(crate) fn with_context(self, context: impl Into<String>) -> Self {
        Error::Experiment {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
