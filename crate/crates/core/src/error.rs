use thiserror::Error;

use crate::trig_field::Frequency;

/// Errors raised by the field algebra, the construction, and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("arity mismatch: expected a {expected} field, got a {found} field")]
    Arity {
        expected: &'static str,
        found: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mode {mode} does not fit an N={n} grid (limit |k_axis| <= {limit})")]
    Resolution { mode: Frequency, n: usize, limit: i128 },

    #[error("parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("CFL violation at t={t}: |u|_inf={u_max}, dt={dt}, N={n}")]
    Cfl { t: f64, u_max: f64, dt: f64, n: usize },

    #[error("non-finite value in {field} at t={t}")]
    NonFinite { field: &'static str, t: f64 },

    #[error("snapshot format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
