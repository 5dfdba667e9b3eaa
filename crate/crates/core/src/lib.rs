//! Steady-state Gaussian statistics of a driven optomechanical cavity.
//!
//! The pipeline runs from physical rates ([`SystemParams`]) to the classical
//! working point ([`solve_steady_state`]), the linearized drift and diffusion
//! matrices, the Lyapunov steady-state covariance ([`steady_covariance`]) and
//! finally the relative-entropy coherence of the resulting two-mode Gaussian
//! state ([`coherence_difference`]).
//!
//! Conventions used throughout:
//!
//! * all rates are dimensionless, in units of the mechanical frequency
//!   (`omega_m = 1`);
//! * quadratures are ordered mode-major, mechanical first: `(q, p, X, Y)`;
//! * the vacuum covariance is the identity, so physical states have every
//!   symplectic eigenvalue `>= 1`;
//! * entropies and coherences are in nats.

pub mod config;
pub mod detect;
mod error;
pub mod gaussian;
pub mod model;
pub mod steady;
pub mod sweep;

pub use error::{Error, Result};

pub use detect::{
    estimate_covariance, output_covariance, reconstruct_mechanical, sample_output_records,
    CovarianceEstimate, DetectionParams, OutputModel, RecordSet, RwaWarning,
};
pub use gaussian::{
    coherence_difference, coherence_one_mode, coherence_two_mode, f_entropy, mean_occupation,
    mutual_information, symplectic_eigenvalues, symplectic_eigenvalues_closed_form,
    von_neumann_entropy, CoherenceReport, GaussianState, SymplecticSpectrum,
};
pub use model::{
    build_diffusion, build_drift, solve_steady_state, stability_routh_hurwitz, stability_spectral,
    DiffusionMatrix, DriftMatrix, RouthHurwitz, SpectralStability, SteadyState, SystemParams,
    Verdict,
};
pub use steady::{
    integrate_covariance_ode, rwa_mechanical_variance, solve_lyapunov, steady_covariance,
    CovarianceSolution, Method, OdeOptions, RwaDiagnostic, SteadyPoint,
};
pub use sweep::{run_sweep, Axis, Scale, SweepParam, SweepResult, SweepRow, SweepSpec};
