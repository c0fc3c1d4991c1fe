use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("format error in {path} at line {line}: {message}")]
    FormatAtLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path} is truncated at byte offset {offset}: {message}")]
    Truncated {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
