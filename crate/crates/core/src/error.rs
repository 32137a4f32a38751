use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {message} (achieved error estimate {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("sampling budget exhausted after {tried} trials with {accepted} accepted")]
    BudgetExhausted {
        accepted: u64,
        tried: u64,
        /// Mean of the statistic over the accepted draws, if any.
        partial_mean: Option<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
