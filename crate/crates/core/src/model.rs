//! Optomechanical system parameters, classical working point, drift and
//! diffusion matrices of the linearized fluctuations, and stability checks.

use std::fmt;

use nalgebra::{linalg::Schur, Complex, Matrix4};
use serde::Serialize;

use crate::{Error, Result};

/// Margins within this band of zero are reported as marginal.
pub const MARGIN_BAND: f64 = 1e-8;

/// Strict-stability threshold on the spectral abscissa.
pub const ABSCISSA_TOL: f64 = 1e-12;

/// Physical rates of the driven optomechanical cavity, in units of the
/// mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    /// Mechanical frequency; the unit of every other rate.
    pub omega_m: f64,
    pub gamma_m: f64,
    /// Cavity decay rate.
    pub kappa: f64,
    /// Bare cavity-drive detuning `omega_c - omega_d`.
    pub delta0: f64,
    /// Single-photon optomechanical coupling.
    pub g0: f64,
    /// Drive amplitude.
    pub drive_e: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub n_th: f64,
}

impl SystemParams {
    /// Parameters with `omega_m = 1`. Panics never; call [`validate`](Self::validate).
    pub fn new(gamma_m: f64, kappa: f64, delta0: f64, g0: f64, drive_e: f64, n_th: f64) -> Self {
        SystemParams { omega_m: 1.0, gamma_m, kappa, delta0, g0, drive_e, n_th }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("delta0", self.delta0),
            ("g0", self.g0),
            ("drive_e", self.drive_e),
            ("n_th", self.n_th),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {value}")));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::param("omega_m", "must be > 0"));
        }
        if self.gamma_m <= 0.0 {
            return Err(Error::param("gamma_m", format!("must be > 0, got {}", self.gamma_m)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::param("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        if self.g0 < 0.0 {
            return Err(Error::param("g0", format!("must be >= 0, got {}", self.g0)));
        }
        if self.drive_e < 0.0 {
            return Err(Error::param("drive_e", format!("must be >= 0, got {}", self.drive_e)));
        }
        if self.n_th < 0.0 {
            return Err(Error::param("n_th", format!("must be >= 0, got {}", self.n_th)));
        }
        Ok(())
    }
}

/// One admissible solution of the steady-state cubic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    /// Intracavity photon number `|alpha_s|^2`.
    pub n_c: f64,
    /// Effective detuning `delta0 - g0 q_s / sqrt(2)`.
    pub delta_eff: f64,
}

/// Classical working point about which the dynamics are linearized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub q_s: f64,
    pub p_s: f64,
    /// Cavity amplitude, real by choice of drive phase.
    pub alpha_s: f64,
    pub n_c: f64,
    pub delta_eff: f64,
    /// Effective coupling `sqrt(2) g0 alpha_s`.
    pub g_eff: f64,
    /// All admissible roots in ascending `n_c`; the principal one is first.
    pub branches: Vec<Branch>,
}

impl SteadyState {
    pub fn is_multistable(&self) -> bool {
        self.branches.len() > 1
    }

    fn from_branch(params: &SystemParams, principal: Branch, branches: Vec<Branch>) -> Self {
        let alpha_s = principal.n_c.sqrt();
        SteadyState {
            q_s: std::f64::consts::SQRT_2 * params.g0 * principal.n_c / params.omega_m,
            p_s: 0.0,
            alpha_s,
            n_c: principal.n_c,
            delta_eff: principal.delta_eff,
            g_eff: std::f64::consts::SQRT_2 * params.g0 * alpha_s,
            branches,
        }
    }
}

/// Real roots of `x^3 + a2 x^2 + a1 x + a0`, ascending, unpolished.
fn real_cubic_roots(a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let shift = -a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Solve the working point.
///
/// With `x = g0^2 n_c / omega_m` the frequency pull of the cavity, the
/// self-consistency condition `n_c [kappa^2 + (delta0 - x)^2] = E^2` becomes
/// the well-scaled cubic `x (kappa^2 + (delta0 - x)^2) = g0^2 E^2 / omega_m`.
/// Its closed-form roots are polished with Newton steps. All non-negative
/// roots are returned; the smallest is principal, since it connects
/// continuously to the undriven cavity.
pub fn solve_steady_state(params: &SystemParams) -> Result<SteadyState> {
    params.validate()?;
    let SystemParams { omega_m, kappa, delta0, g0, drive_e, .. } = *params;
    let k2 = kappa * kappa;
    let e2 = drive_e * drive_e;

    if g0 == 0.0 || drive_e == 0.0 {
        let n_c = e2 / (k2 + delta0 * delta0);
        let b = Branch { n_c, delta_eff: delta0 };
        return Ok(SteadyState::from_branch(params, b, vec![b]));
    }

    let s = g0 * g0 / omega_m;
    let target = s * e2;
    let f = |x: f64| x * (k2 + (delta0 - x).powi(2)) - target;
    let df = |x: f64| k2 + (delta0 - x).powi(2) - 2.0 * x * (delta0 - x);

    let mut xs: Vec<f64> = real_cubic_roots(-2.0 * delta0, k2 + delta0 * delta0, -target)
        .into_iter()
        .map(|mut x| {
            for _ in 0..6 {
                let d = df(x);
                if d == 0.0 {
                    break;
                }
                let next = x - f(x) / d;
                if !next.is_finite() || f(next).abs() >= f(x).abs() {
                    break;
                }
                x = next;
            }
            x
        })
        .filter(|&x| x > 0.0)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1e-300));

    if xs.is_empty() {
        return Err(Error::Numerical(format!(
            "steady-state cubic has no non-negative real root for E = {}",
            crate::sweep::format_sig(drive_e)
        )));
    }
    let branches: Vec<Branch> =
        xs.iter().map(|&x| Branch { n_c: x / s, delta_eff: delta0 - x }).collect();
    Ok(SteadyState::from_branch(params, branches[0], branches))
}

/// Drift matrix of `(dq, dp, dX, dY)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix4<f64>);

/// Noise-input diffusion matrix (diagonal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub Matrix4<f64>);

impl DriftMatrix {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }
}

impl DiffusionMatrix {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }
}

pub fn build_drift(params: &SystemParams, steady: &SteadyState) -> DriftMatrix {
    let w = params.omega_m;
    let g = steady.g_eff;
    let d = steady.delta_eff;
    let k = params.kappa;
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, w,                0.0, 0.0,
        -w,  -params.gamma_m,  g,   0.0,
        0.0, 0.0,              -k,  d,
        g,   0.0,              -d,  -k,
    );
    DriftMatrix(a)
}

pub fn build_diffusion(params: &SystemParams) -> DiffusionMatrix {
    DiffusionMatrix(Matrix4::from_diagonal(&nalgebra::Vector4::new(
        0.0,
        2.0 * params.gamma_m * (2.0 * params.n_th + 1.0),
        2.0 * params.kappa,
        2.0 * params.kappa,
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouthHurwitz {
    /// `omega_m (Delta^2 + kappa^2) - G^2 Delta`.
    pub static_margin: f64,
    /// `2 gamma_m kappa {s+ s- + gamma_m [v (Delta^2 + kappa^2) + 2 kappa omega_m^2]} + Delta omega_m G^2 v`.
    pub dynamic_margin: f64,
    pub verdict: Verdict,
}

impl RouthHurwitz {
    pub fn margins(&self) -> [f64; 2] {
        [self.static_margin, self.dynamic_margin]
    }

    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

/// The two Routh-Hurwitz inequalities of the linearized drift matrix, with
/// `s+- = kappa^2 + (omega_m +- Delta)^2` and `v = gamma_m + 2 kappa`:
///
/// * static: `omega_m (Delta^2 + kappa^2) - G^2 Delta > 0`
/// * dynamic: `2 gamma_m kappa {s+ s- + gamma_m [v (Delta^2 + kappa^2) + 2 kappa omega_m^2]}
///   + Delta omega_m G^2 v^2 > 0`
///
/// The dynamic margin is exactly the third Hurwitz determinant of the
/// characteristic polynomial; the first two and the cubic coefficient are
/// positive for any physical rates, so the pair is complete for either sign
/// of the detuning.
pub fn stability_routh_hurwitz(params: &SystemParams, steady: &SteadyState) -> RouthHurwitz {
    let w = params.omega_m;
    let gm = params.gamma_m;
    let k = params.kappa;
    let d = steady.delta_eff;
    let g2 = steady.g_eff * steady.g_eff;
    let dk = d * d + k * k;
    let s_plus = k * k + (w + d).powi(2);
    let s_minus = k * k + (w - d).powi(2);
    let v = gm + 2.0 * k;

    let static_margin = w * dk - g2 * d;
    let dynamic_margin =
        2.0 * gm * k * (s_plus * s_minus + gm * (v * dk + 2.0 * k * w * w)) + d * w * g2 * v * v;

    let margins = [static_margin, dynamic_margin];
    let verdict = if margins.iter().any(|&m| m < -MARGIN_BAND) {
        Verdict::Unstable
    } else if margins.iter().any(|&m| m.abs() <= MARGIN_BAND) {
        Verdict::Marginal
    } else {
        Verdict::Stable
    };
    RouthHurwitz { static_margin, dynamic_margin, verdict }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStability {
    /// Largest real part over the eigenvalues of the drift matrix.
    pub abscissa: f64,
    pub eigenvalues: Vec<Complex<f64>>,
    pub stable: bool,
}

/// Stability from the eigenvalues of the drift matrix.
pub fn stability_spectral(a: &DriftMatrix) -> Result<SpectralStability> {
    if a.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("drift matrix is not finite".into()));
    }
    let schur = Schur::try_new(a.0, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let abscissa = eigenvalues[0].re;
    Ok(SpectralStability { abscissa, eigenvalues, stable: abscissa < -ABSCISSA_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig1(g0: f64, e: f64) -> SystemParams {
        SystemParams::new(0.01, 0.1, 1.0, g0, e, 10.0)
    }

    /// Damped fixed-point iteration of the photon-number self-consistency.
    fn fixed_point_photons(p: &SystemParams) -> Option<f64> {
        let mut n = 0.0;
        for _ in 0..100_000 {
            let shift = p.delta0 - p.g0 * p.g0 * n / p.omega_m;
            let next = p.drive_e.powi(2) / (p.kappa.powi(2) + shift * shift);
            let relaxed = 0.5 * n + 0.5 * next;
            if (relaxed - n).abs() <= 1e-15 * relaxed.max(1.0) {
                return Some(relaxed);
            }
            n = relaxed;
        }
        None
    }

    #[test]
    fn linear_cavity() {
        let p = SystemParams::new(0.01, 0.1, 1.0, 0.0, 10.0, 10.0);
        let s = solve_steady_state(&p).unwrap();
        assert_abs_diff_eq!(s.n_c, 100.0 / 1.01, epsilon = 1e-12);
        assert_eq!(s.q_s, 0.0);
        assert_eq!(s.g_eff, 0.0);
        assert_eq!(s.delta_eff, 1.0);
    }

    #[test]
    fn undriven_cavity() {
        let s = solve_steady_state(&fig1(1e-3, 0.0)).unwrap();
        assert_eq!((s.q_s, s.alpha_s, s.delta_eff), (0.0, 0.0, 1.0));
        assert_eq!(s.p_s, 0.0);
    }

    #[test]
    fn cubic_matches_fixed_point_oracle() {
        let p = fig1(1e-4, 500.0);
        let s = solve_steady_state(&p).unwrap();
        let oracle = fixed_point_photons(&p).unwrap();
        assert!((s.n_c - oracle).abs() <= 1e-10 * oracle, "{} vs {}", s.n_c, oracle);
    }

    #[test]
    fn residuals_hold_on_every_branch() {
        for (g0, e) in [(1e-4, 500.0), (5e-4, 300.0), (1e-3, 350.0), (1e-3, 500.0), (1e-2, 300.0)] {
            let p = fig1(g0, e);
            let s = solve_steady_state(&p).unwrap();
            for b in &s.branches {
                let q = std::f64::consts::SQRT_2 * g0 * b.n_c;
                let delta = p.delta0 - g0 * q / std::f64::consts::SQRT_2;
                assert_abs_diff_eq!(delta, b.delta_eff, epsilon = 1e-10);
                let res = b.n_c * (p.kappa.powi(2) + delta * delta) - e * e;
                assert!(res.abs() <= 1e-8 * (e * e).max(1.0), "g0={g0} E={e} residual {res}");
            }
        }
    }

    #[test]
    fn bistable_window_reports_three_branches() {
        let s = solve_steady_state(&fig1(1e-3, 300.0)).unwrap();
        assert!(s.is_multistable());
        assert_eq!(s.branches.len(), 3);
        assert!(s.branches.windows(2).all(|w| w[0].n_c < w[1].n_c));
        assert_eq!(s.n_c, s.branches[0].n_c);
    }

    #[test]
    fn small_coupling_is_linear_in_g0() {
        let e = 200.0;
        let base = fig1(0.0, e);
        let n0 = solve_steady_state(&base).unwrap().n_c;
        for g0 in [1e-7, 2e-7, 4e-7] {
            let s = solve_steady_state(&fig1(g0, e)).unwrap();
            let g_expected = std::f64::consts::SQRT_2 * g0 * n0.sqrt();
            assert!((s.g_eff - g_expected).abs() <= 1e-6 * g_expected);
            assert!((1.0 - s.delta_eff - g0 * g0 * n0).abs() <= 1e-12);
        }
    }

    #[test]
    fn drift_layout() {
        let p = fig1(1e-4, 500.0);
        let s = solve_steady_state(&p).unwrap();
        let a = build_drift(&p, &s).0;
        for (i, j) in [(0, 0), (0, 2), (0, 3), (1, 3), (2, 0), (2, 1), (3, 1)] {
            assert_eq!(a[(i, j)], 0.0, "entry ({}, {})", i + 1, j + 1);
        }
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 0)], -1.0);
        assert_eq!(a[(1, 1)], -0.01);
        assert_eq!(a[(2, 2)], -0.1);
        assert_eq!(a[(3, 3)], -0.1);
        assert_eq!(a[(1, 2)], a[(3, 0)]);
        assert_eq!(a[(2, 3)], -a[(3, 2)]);
        assert_abs_diff_eq!(a[(1, 2)], std::f64::consts::SQRT_2 * 1e-4 * s.alpha_s, epsilon = 1e-15);
    }

    #[test]
    fn decoupled_drift_is_block_diagonal() {
        for p in [fig1(0.0, 300.0), fig1(1e-3, 0.0)] {
            let s = solve_steady_state(&p).unwrap();
            let a = build_drift(&p, &s).0;
            assert_eq!(a.fixed_view::<2, 2>(0, 2).amax(), 0.0);
            assert_eq!(a.fixed_view::<2, 2>(2, 0).amax(), 0.0);
        }
    }

    #[test]
    fn diffusion_values() {
        let d = build_diffusion(&fig1(1e-4, 0.0)).0;
        assert_eq!((d[(0, 0)], d[(2, 2)], d[(3, 3)]), (0.0, 0.2, 0.2));
        assert_abs_diff_eq!(d[(1, 1)], 0.42, epsilon = 1e-15);
        let d = build_diffusion(&SystemParams::new(1e-3, 0.1, 1.0, 0.0, 0.0, 10.0)).0;
        assert_abs_diff_eq!(d[(1, 1)], 0.042, epsilon = 1e-15);
        let d = build_diffusion(&SystemParams::new(0.01, 0.1, 1.0, 0.0, 0.0, 0.0)).0;
        assert_eq!(d.diagonal().as_slice(), &[0.0, 0.02, 0.2, 0.2]);
        assert_eq!(d.amax(), d.diagonal().amax());
    }

    #[test]
    fn undriven_is_stable_with_closed_form_margins() {
        let p = fig1(1e-3, 0.0);
        let s = solve_steady_state(&p).unwrap();
        let rh = stability_routh_hurwitz(&p, &s);
        assert_eq!(rh.verdict, Verdict::Stable);
        assert_abs_diff_eq!(rh.static_margin, 1.0 + 0.01, epsilon = 1e-15);
        assert!(rh.dynamic_margin > 0.0);

        let spec = stability_spectral(&build_drift(&p, &s)).unwrap();
        assert!(spec.stable);
        // Mechanical block: roots of l^2 + gamma l + 1, real part -gamma/2.
        // Optical block: -kappa +- i delta.
        assert_abs_diff_eq!(spec.abscissa, -0.005, epsilon = 1e-12);
    }

    #[test]
    fn blue_detuned_strong_coupling_is_unstable() {
        let p = SystemParams::new(0.01, 0.1, -1.0, 1e-3, 300.0, 10.0);
        let s = solve_steady_state(&p).unwrap();
        let rh = stability_routh_hurwitz(&p, &s);
        assert_eq!(rh.verdict, Verdict::Unstable);
        assert!(!stability_spectral(&build_drift(&p, &s)).unwrap().stable);
    }

    /// Coefficients `a1..a4` of `det(l I - A)` from sums of principal minors.
    fn char_poly(a: &Matrix4<f64>) -> [f64; 4] {
        let minor_sum = |k: usize| -> f64 {
            let mut total = 0.0;
            for mask in 0u32..16 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
                let sub = nalgebra::DMatrix::from_fn(k, k, |r, c| a[(idx[r], idx[c])]);
                total += sub.determinant();
            }
            total
        };
        [-minor_sum(1), minor_sum(2), -minor_sum(3), minor_sum(4)]
    }

    fn manual_steady(delta_eff: f64, g_eff: f64) -> SteadyState {
        SteadyState {
            q_s: 0.0,
            p_s: 0.0,
            alpha_s: 0.0,
            n_c: 0.0,
            delta_eff,
            g_eff,
            branches: Vec::new(),
        }
    }

    #[test]
    fn dynamic_margin_is_third_hurwitz_determinant() {
        for &(gm, k, d, g) in &[
            (0.01, 0.1, 1.0, 0.05),
            (0.00644, 0.125, -1.647, 0.141),
            (0.0181, 3.58, -1.18, 1.37),
            (0.05, 2.0, 0.3, 0.8),
        ] {
            let p = SystemParams::new(gm, k, 0.0, 0.0, 0.0, 0.0);
            let s = manual_steady(d, g);
            let [a1, a2, a3, a4] = char_poly(&build_drift(&p, &s).0);
            let h3 = a3 * (a1 * a2 - a3) - a1 * a1 * a4;
            let rh = stability_routh_hurwitz(&p, &s);
            assert_abs_diff_eq!(rh.dynamic_margin, h3, epsilon = 1e-10 * h3.abs().max(1.0));
            assert_abs_diff_eq!(rh.static_margin * p.omega_m, a4, epsilon = 1e-12);
        }
    }

    #[test]
    fn blue_detuned_verdicts_follow_spectrum() {
        // Near-boundary points where a coupling term linear in v gets the
        // verdict wrong.
        for &(gm, k, d, g, stable) in
            &[(0.00644, 0.125, -1.647, 0.141, true), (0.0181, 3.58, -1.18, 1.37, false)]
        {
            let p = SystemParams::new(gm, k, 0.0, 0.0, 0.0, 0.0);
            let s = manual_steady(d, g);
            let rh = stability_routh_hurwitz(&p, &s);
            assert_eq!(rh.is_stable(), stable);
            assert_eq!(stability_spectral(&build_drift(&p, &s)).unwrap().stable, stable);
        }
    }

    #[test]
    fn fig1_strong_point_agrees_with_spectrum() {
        for e in [100.0, 300.0, 350.0, 400.0, 500.0] {
            let p = fig1(1e-3, e);
            let s = solve_steady_state(&p).unwrap();
            let rh = stability_routh_hurwitz(&p, &s);
            let spec = stability_spectral(&build_drift(&p, &s)).unwrap();
            assert_eq!(rh.is_stable(), spec.stable, "E = {e}");
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = fig1(1e-4, 1.0);
        p.gamma_m = -1.0;
        assert!(matches!(solve_steady_state(&p), Err(Error::Parameter { name: "gamma_m", .. })));
        let mut p = fig1(1e-4, 1.0);
        p.kappa = f64::NAN;
        assert!(solve_steady_state(&p).is_err());
    }

    #[test]
    fn cubic_roots_of_known_polynomial() {
        // (x - 1)(x - 2)(x - 3) = x^3 - 6x^2 + 11x - 6
        let r = real_cubic_roots(-6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        // x^3 + x + 1 has one real root near -0.6823.
        let r = real_cubic_roots(0.0, 1.0, 1.0);
        assert_eq!(r.len(), 1);
        assert_abs_diff_eq!(r[0].powi(3) + r[0] + 1.0, 0.0, epsilon = 1e-12);
    }
}
