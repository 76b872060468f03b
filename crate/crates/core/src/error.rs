use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A constructor parameter is out of range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// What is wrong with it.
        reason: String,
    },
    /// A structural assumption (monotone cost, one-level mixture, ...) fails.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    /// A root finder was given an interval without a sign change.
    #[error("root of {what} not bracketed in [{lo}, {hi}]")]
    NotBracketed {
        /// The function whose root was sought.
        what: &'static str,
        /// Lower end of the bracket.
        lo: f64,
        /// Upper end of the bracket.
        hi: f64,
    },
    /// The requested combination of model and method is not implemented.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// An empirical computation received no data.
    #[error("empty sample")]
    EmptySample,
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
