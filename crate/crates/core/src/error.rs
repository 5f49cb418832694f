use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A law, compensation or numerics parameter violates its range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// The operation is not defined for the given variant.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An iterative evaluation failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The integrated state became non-finite.
    #[error("numeric divergence at t = {time}")]
    Divergence { time: f64 },

    #[error("ill-conditioned KKT matrix at t = {time} (condition estimate {cond:e})")]
    IllConditioned { time: f64, cond: f64 },

    /// Inconsistent dimensions or a singular factorization.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
