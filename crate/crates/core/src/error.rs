use thiserror::Error;

/// Errors raised by the Gaussian-state, sampling, and dynamics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("matrix is not a valid covariance: {0}")]
    InvalidCovariance(String),

    #[error("matrix is not orthogonal (max |O O^T - 1| = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("invalid Renyi index {0}; must be positive")]
    InvalidIndex(f64),

    #[error("exhaustive enumeration refused for {sites} sites (limit is {limit})")]
    TooLarge { sites: usize, limit: usize },

    #[error("numerically singular matrix: {0}")]
    Singular(String),

    #[error("degenerate trajectory at step {step}: mode norm {norm:e} collapsed")]
    DegenerateTrajectory { step: usize, norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed covariance container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
