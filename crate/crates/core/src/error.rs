use thiserror::Error;

use crate::endowment::EndowmentReport;

/// Errors raised by the laboratory. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Input(String),
    /// An operation was called outside its documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A configured resource bound would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// An exhaustive check ran out of budget; the partial report is kept.
    #[error("combinatorial budget of {budget} checks exceeded")]
    Budget {
        budget: u64,
        partial: Box<EndowmentReport>,
    },
    /// The ground-model hypothesis of a scenario could not be met.
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
