use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed textual input; `position` is 1-based where meaningful.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// Operands live on different qubit counts.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation requires a state the value is not in (e.g. a circuit that
    /// still contains randomly sampled gates).
    #[error("state error: {0}")]
    State(String),

    /// Requested combination is not defined (e.g. signature basis with a
    /// fixed single-qubit gate).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Problem size exceeds what the backend can represent.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
