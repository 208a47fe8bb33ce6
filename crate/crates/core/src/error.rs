use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the quantity being computed.
    #[error("{name} = {value} violates {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("detection at t = {detect} precedes emission at t = {emit}")]
    Causality { emit: f64, detect: f64 },
    #[error("propagator is singular at zero separation")]
    Singularity,
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// The caller combined inputs the operation does not support.
    #[error("usage: {0}")]
    Usage(String),
    #[error("order {0} is not supported (maximum is 4)")]
    UnsupportedOrder(usize),
    /// A constructor rejected an invariant violation.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint: "must be finite and > 0",
        })
    }
}
