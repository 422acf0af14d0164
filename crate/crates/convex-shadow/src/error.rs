use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("rank-deficient spanning set: {0}")]
    RankDeficient(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The gauge is not differentiable at the origin; callers must not ask.
    #[error("gauge gradient is undefined at the origin")]
    OriginGradient,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
