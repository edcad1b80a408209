use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A market configuration was rejected.
    #[error("invalid market: {0}")]
    Model(String),

    /// A control failed the admissibility checks.
    #[error("inadmissible control: {0}")]
    Validation(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hypothesis required by the solver does not hold.
    #[error("infeasible parameters: condition {condition} violated ({detail})")]
    Infeasible {
        condition: &'static str,
        detail: String,
    },

    /// An iterative method did not converge.
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    /// Configuration or file-format problem.
    #[error("config error: {0}")]
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
