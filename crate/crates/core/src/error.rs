// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series was evaluated outside the range it was validated on.
    #[error("range error: u = {u} exceeds validated range {u_max}")]
    Range { u: f64, u_max: f64 },

    /// Adaptive quadrature did not reach its tolerance within the depth limit.
    #[error("quadrature tolerance not met: estimate {estimate}, error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    /// Conditioning on survival with no surviving paths.
    #[error("no survivors at checkpoint {0}")]
    EmptyConditioning(usize),

    /// Too few usable points for a fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid simulation or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
