use thiserror::Error;

/// Errors raised by the numerical routines and the sweep front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument out of domain ({detail})")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// The adaptive integrator ran out of subdivisions. The best estimate is
    /// still carried so callers can decide whether to use it.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {abs_error:e}")]
    NotConverged { estimate: f64, abs_error: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
