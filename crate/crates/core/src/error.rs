use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinkError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("time integration failed: {0}")]
    Integration(String),
    #[error("vanishing denominator for composition {parts:?} at vertex {vertex}")]
    Singular { parts: Vec<usize>, vertex: usize },
    #[error("state is not in the span of the supplied projectors (residual {0:e})")]
    ProjectionMismatch(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operator has no point spectrum for gamma = 0")]
    NoPointSpectrum,
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KinkError>;
