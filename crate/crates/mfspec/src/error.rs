use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported filter: {0} vanishing moments (supported: 1..=10)")]
    UnsupportedFilter(usize),
    #[error("insufficient length: {len} samples cannot support {levels} levels with {taps} taps")]
    InsufficientLength { len: usize, levels: usize, taps: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid scale range: {0}")]
    InvalidRange(String),
    #[error("covariance embedding is not positive definite (min eigenvalue {0:e})")]
    Embedding(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
