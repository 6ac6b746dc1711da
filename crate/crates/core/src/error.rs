use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("degenerate rate: alpha * t = {0}")]
    DegenerateRate(f64),

    #[error("{sites} sites need 2^{sites} states, above the cap of {cap}")]
    TooLarge { sites: usize, cap: usize },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("numerical consistency: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
