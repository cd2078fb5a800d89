use thiserror::Error;

/// Errors raised by the geometry kernels and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("positivity failure: {0}")]
    Positivity(String),

    #[error("symmetry residual {residual:e} exceeds {tolerance:e} ({which})")]
    Symmetry {
        which: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("least-squares sampling failed: {0}")]
    Sampling(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
