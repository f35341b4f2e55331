use thiserror::Error;

/// Error type shared by all relwave modules.
#[derive(Debug, Error)]
pub enum RelwaveError {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value object is in the wrong state for the requested operation
    /// (e.g. a physical-space field passed where a spectral one is needed).
    #[error("state error: {0}")]
    State(String),

    /// A configured resource cap would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    /// Configuration or input validation failure.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl RelwaveError {
    pub fn domain(msg: impl Into<String>) -> Self {
        RelwaveError::Domain(msg.into())
    }

    pub fn state(msg: impl Into<String>) -> Self {
        RelwaveError::State(msg.into())
    }
}
