use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum QhdError {
    /// Bad configuration input (file syntax, key values, constraint violations).
    #[error("configuration error: {0}")]
    Config(String),

    /// Fields on incompatible grids, or snapshot headers that do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Parameter outside its documented domain.
    #[error("validation error: {0}")]
    Validation(String),

    /// Non-finite values appeared during propagation.
    #[error("numerical blow-up at t = {t_last_good}: {detail}")]
    BlowUp { t_last_good: f64, detail: String },

    /// Operation declined by a cost or applicability guard.
    #[error("refused: {0}")]
    Refusal(String),

    /// Malformed snapshot or sidecar data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QhdError>;
