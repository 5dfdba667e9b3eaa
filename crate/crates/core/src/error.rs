use thiserror::Error;

use crate::model::Verdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state or value violates the uncertainty principle (or an equivalent
    /// bound) by more than the numerical clamp allows.
    #[error("unphysical {what}: {value}")]
    Physicality { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The principal working point is not strictly stable.
    #[error("working point is {verdict}: Routh-Hurwitz margins ({:.6e}, {:.6e})", margins[0], margins[1])]
    NotStable { verdict: Verdict, margins: [f64; 2] },

    #[error("drift matrix is not strictly stable (spectral abscissa {abscissa:.6e})")]
    UnstableDrift { abscissa: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration did not converge by t_end (final |dV/dt| = {derivative_norm:.3e})")]
    NotConverged { derivative_norm: f64 },

    #[error("inconsistent measurement: output covariance falls below vacuum (eigenvalue {min_eigenvalue:.3e})")]
    InconsistentMeasurement { min_eigenvalue: f64 },

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}
