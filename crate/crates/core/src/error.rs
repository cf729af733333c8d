use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("singular matrix encountered at pivot {0}")]
    Singular(usize),
    #[error("singular smoother: zero diagonal entry at node {0}")]
    SingularSmoother(usize),
    #[error("problem too large for direct solve: {unknowns} unknowns (limit {limit})")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("rotation angle too large: integrand factor magnitude {0:e} overflows")]
    RotationTooLarge(f64),
    #[error("channel closed: {0}")]
    ChannelClosed(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
