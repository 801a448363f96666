use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants are grouped by how they should be
/// handled downstream: input/validation problems vs. numeric/runtime
/// failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus or dump file failed to parse or validate.
    #[error("{path}:{line}: {msg}")]
    Corpus {
        path: String,
        line: usize,
        msg: String,
    },

    /// An argument or configuration value violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor or index shapes do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A computation produced or encountered a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A checkpoint file is unreadable or inconsistent with the vocabulary.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs or configuration, as opposed to
    /// failures arising during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Corpus { .. } | Error::InvalidInput(_) | Error::Shape(_) | Error::Checkpoint(_)
        )
    }
}
