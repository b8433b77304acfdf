use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error(
        "series truncation bound {bound:e} exceeds tolerance {tolerance:e} with {terms} terms"
    )]
    SeriesTruncation {
        terms: usize,
        bound: f64,
        tolerance: f64,
    },

    #[error("degenerate gamma fit: {0}")]
    DegenerateFit(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("no active base station remains")]
    AllSleeping,

    #[error("policy refused: {0}")]
    Policy(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
