use thiserror::Error;

use crate::eigen::RayleighReport;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (p range, ordering, lengths, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point lies outside the domain of a weight or mesh.
    #[error("point {x} is outside the domain [{a}, {b}]")]
    Domain { x: f64, a: f64, b: f64 },

    /// The Rayleigh iteration could not start (zero mass of the initial guess).
    #[error("initialization failed: {0}")]
    Initialization(String),

    /// A non-finite energy appeared during the Rayleigh iteration.
    #[error("Rayleigh iteration diverged after {} iterations", last_good.iterations)]
    Divergence { last_good: Box<RayleighReport> },

    /// The sweep endpoints do not bracket a decay/growth transition.
    #[error("lambda bracket invalid: lo={lo_status}, hi={hi_status}")]
    Bracket { lo_status: String, hi_status: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
