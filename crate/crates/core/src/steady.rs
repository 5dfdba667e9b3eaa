//! Steady-state covariance of the linearized fluctuations.
//!
//! The canonical route is the Lyapunov equation `A V + V A^T = -D`, solved as
//! a dense 16-unknown linear system. [`integrate_covariance_ode`] integrates
//! `dV/dt = A V + V A^T + D` to its fixed point and serves as an independent
//! check.

use nalgebra::{Matrix4, SMatrix, SVector, Vector4};
use serde::Serialize;

use crate::gaussian::{coherence_difference, CoherenceReport, GaussianState};
use crate::model::{
    build_diffusion, build_drift, solve_steady_state, stability_routh_hurwitz, stability_spectral,
    DiffusionMatrix, DriftMatrix, RouthHurwitz, SteadyState, SystemParams, Verdict,
};
use crate::{Error, Result};

/// Lyapunov residual bound, relative to `max(1, |V|_F)`.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-9;

/// Derivative norm at which the ODE integration is considered converged.
pub const ODE_CONVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lyapunov,
    OdeIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSolution {
    /// Covariance in `(dq, dp, dX, dY)` ordering.
    pub v: Matrix4<f64>,
    /// `|A V + V A^T + D|_F`.
    pub residual: f64,
    pub method: Method,
}

fn lyapunov_residual(a: &Matrix4<f64>, d: &Matrix4<f64>, v: &Matrix4<f64>) -> Matrix4<f64> {
    a * v + v * a.transpose() + d
}

/// Solve `A V + V A^T = -D` for a strictly stable `A`.
pub fn solve_lyapunov(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<CovarianceSolution> {
    let spectrum = stability_spectral(a)?;
    if !spectrum.stable {
        return Err(Error::UnstableDrift { abscissa: spectrum.abscissa });
    }
    let am = a.matrix();
    let dm = d.matrix();

    // Column-major vec: vec(A V) = (I (x) A) vec V, vec(V A^T) = (A (x) I) vec V.
    let eye = Matrix4::<f64>::identity();
    let op: SMatrix<f64, 16, 16> = eye.kronecker(am) + am.kronecker(&eye);
    let rhs = -SVector::<f64, 16>::from_column_slice(dm.as_slice());
    let lu = op.lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular".into()))?;
    // One round of iterative refinement.
    if let Some(dx) = lu.solve(&(rhs - op * x)) {
        x += dx;
    }

    let v = Matrix4::from_column_slice(x.as_slice());
    let v = (v + v.transpose()) * 0.5;
    let residual = lyapunov_residual(am, dm, &v).norm();
    if !residual.is_finite() {
        return Err(Error::Numerical("Lyapunov solution is not finite".into()));
    }
    Ok(CovarianceSolution { v, residual, method: Method::Lyapunov })
}

/// Step size and horizon for [`integrate_covariance_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub dt: f64,
    pub t_end: f64,
}

impl OdeOptions {
    /// `dt = 1e-3 / omega_m`, `t_end = 50 / min(gamma_m, kappa)`.
    pub fn for_params(params: &SystemParams) -> Self {
        OdeOptions {
            dt: 1e-3 / params.omega_m,
            t_end: 50.0 / params.gamma_m.min(params.kappa),
        }
    }
}

/// Integrate `dV/dt = A V + V A^T + D` from `v0` with classical RK4 until
/// `|dV/dt|_F <= 1e-10` or `t_end`.
pub fn integrate_covariance_ode(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    v0: &Matrix4<f64>,
    dt: f64,
    t_end: f64,
) -> Result<CovarianceSolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Input(format!("t_end must be positive, got {t_end}")));
    }
    let am = *a.matrix();
    let at = am.transpose();
    let dm = *d.matrix();
    let rate = |v: &Matrix4<f64>| am * v + v * at + dm;

    let steps = (t_end / dt).ceil() as u64;
    let mut v = *v0;
    let mut k1 = rate(&v);
    for _ in 0..steps {
        if k1.norm() <= ODE_CONVERGENCE_TOL {
            break;
        }
        let k2 = rate(&(v + k1 * (0.5 * dt)));
        let k3 = rate(&(v + k2 * (0.5 * dt)));
        let k4 = rate(&(v + k3 * dt));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        k1 = rate(&v);
        if !k1.norm().is_finite() {
            return Err(Error::NotConverged { derivative_norm: f64::INFINITY });
        }
    }
    let derivative_norm = k1.norm();
    if derivative_norm > ODE_CONVERGENCE_TOL {
        return Err(Error::NotConverged { derivative_norm });
    }
    let v = (v + v.transpose()) * 0.5;
    Ok(CovarianceSolution {
        v,
        residual: lyapunov_residual(&am, &dm, &v).norm(),
        method: Method::OdeIntegration,
    })
}

/// A fully evaluated stable working point.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyPoint {
    pub params: SystemParams,
    pub steady: SteadyState,
    pub stability: RouthHurwitz,
    pub drift: DriftMatrix,
    pub solution: CovarianceSolution,
    /// First moments of `(q, p, X, Y)`: `(q_s, 0, 2 alpha_s, 0)`.
    pub displacement: Vector4<f64>,
}

impl SteadyPoint {
    pub fn state(&self) -> Result<GaussianState> {
        GaussianState::two_mode(&self.solution.v, &self.displacement)
    }

    pub fn coherence(&self) -> Result<CoherenceReport> {
        coherence_difference(&self.state()?)
    }

    pub fn mechanical_block(&self) -> nalgebra::Matrix2<f64> {
        self.solution.v.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

/// Working point, stability and steady covariance for one parameter set.
pub fn steady_covariance(params: &SystemParams) -> Result<SteadyPoint> {
    let steady = solve_steady_state(params)?;
    let stability = stability_routh_hurwitz(params, &steady);
    if stability.verdict != Verdict::Stable {
        return Err(Error::NotStable { verdict: stability.verdict, margins: stability.margins() });
    }
    let drift = build_drift(params, &steady);
    let solution = solve_lyapunov(&drift, &build_diffusion(params))?;
    let displacement = Vector4::new(steady.q_s, steady.p_s, 2.0 * steady.alpha_s, 0.0);
    Ok(SteadyPoint { params: *params, steady, stability, drift, solution, displacement })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwaDiagnostic {
    /// Mechanical variance from the rotating-wave closed form.
    pub value: f64,
    /// `false` when `omega_m >= 10 max(G, kappa)` does not hold.
    pub regime_ok: bool,
}

/// Rotating-wave estimate of the mechanical variance,
/// `n_th + 1/2 - 2 G^2 kappa (1/2 - n_th) / ((gamma_m + 2 kappa)(2 gamma_m kappa + G^2))`.
///
/// This closed form uses a different variance normalization than the rest of
/// the crate (its zero-coupling limit is `n_th + 1/2`), so it is reported
/// for comparison only.
pub fn rwa_mechanical_variance(params: &SystemParams, steady: &SteadyState) -> RwaDiagnostic {
    let g2 = steady.g_eff * steady.g_eff;
    let k = params.kappa;
    let gm = params.gamma_m;
    let n = params.n_th;
    let value = n + 0.5 - 2.0 * g2 * k * (0.5 - n) / ((gm + 2.0 * k) * (2.0 * gm * k + g2));
    let regime_ok = params.omega_m >= 10.0 * steady.g_eff.abs().max(k);
    RwaDiagnostic { value, regime_ok }
}
