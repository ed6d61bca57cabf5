use thiserror::Error;

use crate::bounds::MembershipFailure;

/// Errors produced by the library. Search budget exhaustion is not an
/// error; it is reported in-band on the search report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("2-adic valuation of zero is undefined")]
    UndefinedValuation,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("factorization of {0} is incomplete")]
    IncompleteFactorization(String),

    #[error("resource limit: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: String,
        cap: String,
    },

    #[error("invalid Nielsen instance: {0}")]
    InvalidInstance(MembershipFailure),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
