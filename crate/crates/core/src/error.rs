use thiserror::Error;

/// Errors raised by the estimation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DoaError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = DoaError> = std::result::Result<T, E>;
