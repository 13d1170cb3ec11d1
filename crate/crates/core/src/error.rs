//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed image bytes. `offset` is the byte position the decoder
    /// was looking at when it gave up.
    #[error("image decode error at byte {offset}: {msg}")]
    Decode { offset: usize, msg: String },

    /// A caller violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A manifest or curve file failed to parse. `row` is 1-based and
    /// counts data rows (the header is row 0).
    #[error("manifest error at row {row}: {msg}")]
    Manifest { row: usize, msg: String },

    /// Training could not proceed (e.g. single-class data).
    #[error("training error: {0}")]
    Training(String),

    /// A model or feature vector was used against the wrong spec.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
