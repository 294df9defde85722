use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; `field` names the offending input.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: String, message: String },

    /// A table index or horizon request outside the precomputed range.
    #[error("index {index} out of range (limit {limit}) for {what}")]
    OutOfRange {
        what: &'static str,
        index: i64,
        limit: i64,
    },

    /// The environment window does not cover the indices a computation needs.
    #[error("environment window [{lo}, {hi}] does not cover required [{need_lo}, {need_hi}]")]
    WindowTooSmall {
        lo: i64,
        hi: i64,
        need_lo: i64,
        need_hi: i64,
    },

    /// A computation would exceed the configured work budget.
    #[error("work budget exceeded: {what} needs {needed} units, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u64,
        limit: u64,
    },

    /// An iterative solver ran out of its iteration or bracket-expansion budget.
    #[error("{what} did not converge within the iteration budget")]
    NonConvergence { what: &'static str },

    /// A root finder could not certify its bracket to the requested accuracy.
    #[error("root bracket failure: {0}")]
    RootBracket(String),
}

impl Error {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
