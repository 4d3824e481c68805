//! Error type shared across the crate.
//!
//! Three kinds, chosen so a caller (in particular the CLI) can map them to
//! distinct failure classes:
//!
//! * [`Error::Invalid`] — the request itself is malformed: bad parameters,
//!   inconsistent model pieces, values outside documented domains.
//! * [`Error::NotApplicable`] — the request is well-formed but the theory
//!   behind the requested quantity does not cover it (validity conditions
//!   fail or are unverified, unsupported process class, no exact constant).
//! * [`Error::Numeric`] — the numerics could not deliver: divergent or
//!   inconclusive integrals where a finite value is required, bracketing or
//!   bisection failures, non-finite intermediate values.

/// Crate-wide error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: parameters out of range or inconsistent.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Well-formed input outside the supported/valid regime.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Numerical failure while computing a well-posed quantity.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Shorthand constructor for [`Error::Invalid`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Shorthand constructor for [`Error::NotApplicable`].
    pub fn not_applicable(msg: impl Into<String>) -> Self {
        Error::NotApplicable(msg.into())
    }

    /// Shorthand constructor for [`Error::Numeric`].
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
