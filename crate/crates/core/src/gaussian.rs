//! Gaussian-state toolkit: symplectic spectra, entropies, relative-entropy
//! coherence and two-mode mutual information.
//!
//! Covariances use the vacuum-variance-one convention: with `q = b + b†` and
//! `p = i(b† - b)` the vacuum has `V = I` and every physical state satisfies
//! `nu >= 1` for each symplectic eigenvalue `nu`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::Serialize;

use crate::{Error, Result};

/// Values within this distance below the physical bound snap onto it.
pub const PHYSICAL_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const OCCUPATION_ERROR_TOL: f64 = 1e-6;

/// An N-mode Gaussian state given by its covariance matrix and first moments,
/// ordered `(q1, p1, q2, p2, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    v: DMatrix<f64>,
    d: DVector<f64>,
}

impl GaussianState {
    /// Validates shape, finiteness and symmetry. Physicality is checked lazily
    /// by the operations that need it.
    pub fn new(v: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let dim = v.nrows();
        if dim == 0 || dim % 2 != 0 || v.ncols() != dim {
            return Err(Error::Input(format!(
                "covariance must be a non-empty 2N x 2N matrix, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if d.len() != dim {
            return Err(Error::Input(format!(
                "displacement has length {}, expected {dim}",
                d.len()
            )));
        }
        if v.iter().chain(d.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Input("covariance or displacement is not finite".into()));
        }
        let scale = v.amax().max(f64::MIN_POSITIVE);
        let asym = (&v - v.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Input(format!(
                "covariance is not symmetric (max |V - V^T| = {asym:.3e})"
            )));
        }
        let v = (&v + v.transpose()) * 0.5;
        Ok(GaussianState { v, d })
    }

    /// Zero-mean state.
    pub fn centered(v: DMatrix<f64>) -> Result<Self> {
        let n = v.nrows();
        Self::new(v, DVector::zeros(n))
    }

    pub fn two_mode(v: &Matrix4<f64>, d: &Vector4<f64>) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(4, 4, v.as_slice()),
            DVector::from_column_slice(d.as_slice()),
        )
    }

    pub fn one_mode(v: &Matrix2<f64>, d: &Vector2<f64>) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(2, 2, v.as_slice()),
            DVector::from_column_slice(d.as_slice()),
        )
    }

    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState {
            v: DMatrix::identity(2 * n_modes, 2 * n_modes),
            d: DVector::zeros(2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.v.nrows() / 2
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    /// Reduced covariance and displacement of `mode`.
    pub fn mode_block(&self, mode: usize) -> (Matrix2<f64>, Vector2<f64>) {
        let i = 2 * mode;
        let v = self.v.fixed_view::<2, 2>(i, i).into_owned();
        let d = self.d.fixed_rows::<2>(i).into_owned();
        (v, d)
    }

    /// Off-diagonal block `<x_a x_b>` between modes `a` and `b`.
    pub fn correlation_block(&self, a: usize, b: usize) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(2 * a, 2 * b).into_owned()
    }

    /// The covariance as a fixed 4x4 matrix, for two-mode states only.
    pub fn as_two_mode(&self) -> Result<Matrix4<f64>> {
        self.require_modes(2)?;
        Ok(Matrix4::from_column_slice(self.v.as_slice()))
    }

    fn require_modes(&self, n: usize) -> Result<()> {
        if self.n_modes() != n {
            return Err(Error::Input(format!(
                "expected a {n}-mode state, got {} modes",
                self.n_modes()
            )));
        }
        Ok(())
    }
}

/// Symplectic eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticSpectrum {
    pub nus: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn is_physical(&self) -> bool {
        self.nus.iter().all(|&nu| nu >= 1.0)
    }

    pub fn min(&self) -> f64 {
        self.nus.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Coherence bookkeeping for one two-mode (mechanical, optical) state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CoherenceReport {
    pub c_mec: f64,
    pub c_opt: f64,
    pub c_tot: f64,
    /// `c_tot - c_mec - c_opt`.
    pub delta_c: f64,
    pub mutual_info: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// `sqrt(det V_mec)`.
    pub a: f64,
    /// `sqrt(det V_opt)`.
    pub b: f64,
}

/// Snap `x` onto the physical bound `1` when it undershoots by float noise.
fn snap_to_one(x: f64, what: &'static str) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Physicality { what, value: x });
    }
    if x >= 1.0 {
        Ok(x)
    } else if x >= 1.0 - PHYSICAL_TOL {
        Ok(1.0)
    } else {
        Err(Error::Physicality { what, value: x })
    }
}

fn clamp_nonnegative(x: f64, what: &'static str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -PHYSICAL_TOL {
        Ok(0.0)
    } else {
        Err(Error::Physicality { what, value: x })
    }
}

/// Bosonic entropy function
/// `F(x) = (x+1)/2 ln((x+1)/2) - (x-1)/2 ln((x-1)/2)`, with `F(1) = 0`.
pub fn f_entropy(x: f64) -> Result<f64> {
    let x = snap_to_one(x, "symplectic eigenvalue")?;
    let plus = 0.5 * (x + 1.0);
    let minus = 0.5 * (x - 1.0);
    let tail = if minus > 0.0 { minus * minus.ln() } else { 0.0 };
    Ok(plus * plus.ln() - tail)
}

/// Symplectic eigenvalues of an N-mode covariance.
///
/// These are the moduli of the eigenvalues of `i Omega V`. For a positive
/// definite `V` the same spectrum is given by the singular values of the
/// antisymmetric matrix `V^{1/2} Omega V^{1/2}`, each appearing twice; that
/// route only needs a symmetric eigensolver.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<SymplecticSpectrum> {
    let v = state.covariance();
    let dim = v.nrows();
    let eig = SymmetricEigen::new(v.clone());
    let lmin = eig.eigenvalues.min();
    if lmin <= 0.0 {
        return Err(Error::Physicality { what: "covariance eigenvalue", value: lmin });
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let m = &root * symplectic_form(state.n_modes()) * &root;
    // m is antisymmetric, so m^T m is symmetric PSD with eigenvalues nu_k^2 (twice each).
    let gram = m.transpose() * &m;
    let mut sq: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    debug_assert_eq!(sq.len(), dim);
    let nus = sq
        .chunks(2)
        .map(|pair| {
            let nu = (0.5 * (pair[0] + pair[1])).max(0.0).sqrt();
            if (1.0 - PHYSICAL_TOL..1.0).contains(&nu) {
                1.0
            } else {
                nu
            }
        })
        .collect();
    Ok(SymplecticSpectrum { nus })
}

/// Block-diagonal symplectic form, `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Two-mode symplectic eigenvalues from the block invariants,
/// `nu_{1,2}^2 = (Gamma +- sqrt(Gamma^2 - 4 det V)) / 2` with
/// `Gamma = det V_mec + det V_opt + 2 det V_cor`.
pub fn symplectic_eigenvalues_closed_form(v: &Matrix4<f64>) -> Result<(f64, f64)> {
    let vm = v.fixed_view::<2, 2>(0, 0).determinant();
    let vo = v.fixed_view::<2, 2>(2, 2).determinant();
    let vc = v.fixed_view::<2, 2>(0, 2).determinant();
    let gamma = vm + vo + 2.0 * vc;
    let det = v.determinant();
    let mut disc = gamma * gamma - 4.0 * det;
    if disc < 0.0 {
        // Relative to Gamma^2, the scale at which the subtraction loses digits.
        if disc >= -PHYSICAL_TOL * gamma.abs().max(1.0).powi(2) {
            disc = 0.0;
        } else {
            return Err(Error::Physicality { what: "symplectic discriminant", value: disc });
        }
    }
    let root = disc.sqrt();
    let nu1 = (0.5 * (gamma + root)).max(0.0).sqrt();
    let nu2 = (0.5 * (gamma - root)).max(0.0).sqrt();
    Ok((nu1, nu2))
}

/// Von Neumann entropy `sum_i F(nu_i)`.
pub fn von_neumann_entropy(state: &GaussianState) -> Result<f64> {
    symplectic_eigenvalues(state)?
        .nus
        .iter()
        .map(|&nu| f_entropy(nu))
        .sum()
}

/// Mean excitation number of a single mode, `(V11 + V22 + d1^2 + d2^2 - 2) / 4`.
pub fn mean_occupation(v: &Matrix2<f64>, d: &Vector2<f64>) -> Result<f64> {
    let n = (v[(0, 0)] + v[(1, 1)] + d.norm_squared() - 2.0) / 4.0;
    if !n.is_finite() || n < -OCCUPATION_ERROR_TOL {
        return Err(Error::Physicality { what: "mean occupation", value: n });
    }
    Ok(n.max(0.0))
}

/// Relative-entropy coherence of a one-mode Gaussian state,
/// `-F(nu) + F(2 nbar + 1)`: the distance to the thermal state with the same
/// mean occupation.
pub fn coherence_one_mode(v: &Matrix2<f64>, d: &Vector2<f64>) -> Result<f64> {
    let det = v.determinant();
    if !(det > 0.0) {
        return Err(Error::Physicality { what: "one-mode determinant", value: det });
    }
    let nu = det.sqrt();
    let nbar = mean_occupation(v, d)?;
    clamp_nonnegative(f_entropy(2.0 * nbar + 1.0)? - f_entropy(nu)?, "coherence")
}

fn occupation_term(state: &GaussianState, mode: usize) -> Result<f64> {
    let (v, d) = state.mode_block(mode);
    f_entropy(2.0 * mean_occupation(&v, &d)? + 1.0)
}

/// Relative-entropy coherence of a two-mode Gaussian state,
/// `sum_i [-F(nu_i) + F(2 nbar_i + 1)]`.
pub fn coherence_two_mode(state: &GaussianState) -> Result<f64> {
    state.require_modes(2)?;
    let spectrum = symplectic_eigenvalues(state)?;
    coherence_from_parts(state, &spectrum)
}

fn coherence_from_parts(state: &GaussianState, spectrum: &SymplecticSpectrum) -> Result<f64> {
    let mut c = 0.0;
    for (mode, &nu) in spectrum.nus.iter().enumerate() {
        c += occupation_term(state, mode)? - f_entropy(nu)?;
    }
    clamp_nonnegative(c, "coherence")
}

fn block_root_dets(state: &GaussianState) -> Result<(f64, f64)> {
    let root = |mode| -> Result<f64> {
        let det = state.mode_block(mode).0.determinant();
        if !(det > 0.0) {
            return Err(Error::Physicality { what: "reduced-state determinant", value: det });
        }
        snap_to_one(det.sqrt(), "reduced symplectic eigenvalue")
    };
    Ok((root(0)?, root(1)?))
}

/// Quantum mutual information `F(a) + F(b) - F(nu1) - F(nu2)` of a two-mode
/// state, with `a`, `b` the square roots of the diagonal-block determinants.
pub fn mutual_information(state: &GaussianState) -> Result<f64> {
    state.require_modes(2)?;
    let spectrum = symplectic_eigenvalues(state)?;
    let (a, b) = block_root_dets(state)?;
    mutual_from_parts(a, b, &spectrum)
}

fn mutual_from_parts(a: f64, b: f64, spectrum: &SymplecticSpectrum) -> Result<f64> {
    let joint: f64 = spectrum.nus.iter().map(|&nu| f_entropy(nu)).sum::<Result<f64>>()?;
    clamp_nonnegative(f_entropy(a)? + f_entropy(b)? - joint, "mutual information")
}

/// Total, local and mutual coherence of a (mechanical, optical) state.
pub fn coherence_difference(state: &GaussianState) -> Result<CoherenceReport> {
    state.require_modes(2)?;
    let spectrum = symplectic_eigenvalues(state)?;
    let (a, b) = block_root_dets(state)?;

    let (vm, dm) = state.mode_block(0);
    let (vo, d_o) = state.mode_block(1);
    let c_mec = coherence_one_mode(&vm, &dm)?;
    let c_opt = coherence_one_mode(&vo, &d_o)?;
    let c_tot = coherence_from_parts(state, &spectrum)?;
    let mutual_info = mutual_from_parts(a, b, &spectrum)?;

    Ok(CoherenceReport {
        c_mec,
        c_opt,
        c_tot,
        delta_c: c_tot - c_mec - c_opt,
        mutual_info,
        nu1: spectrum.nus[0],
        nu2: spectrum.nus[1],
        a,
        b,
    })
}

/// Elementary two-mode symplectic transformations in `(q1, p1, q2, p2)`
/// ordering.
pub mod symplectic {
    use nalgebra::{Matrix2, Matrix4};

    fn embed(m: &Matrix2<f64>, mode: usize) -> Matrix4<f64> {
        let mut s = Matrix4::identity();
        s.fixed_view_mut::<2, 2>(2 * mode, 2 * mode).copy_from(m);
        s
    }

    /// Phase-space rotation of one mode by `theta`.
    pub fn rotation(mode: usize, theta: f64) -> Matrix4<f64> {
        let (s, c) = theta.sin_cos();
        embed(&Matrix2::new(c, s, -s, c), mode)
    }

    /// Single-mode squeezer `diag(e^r, e^-r)`.
    pub fn squeezer(mode: usize, r: f64) -> Matrix4<f64> {
        embed(&Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp()), mode)
    }

    pub fn beam_splitter(theta: f64) -> Matrix4<f64> {
        let (s, c) = theta.sin_cos();
        Matrix4::new(
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, s, //
            -s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        )
    }

    pub fn two_mode_squeezer(r: f64) -> Matrix4<f64> {
        let (ch, sh) = (r.cosh(), r.sinh());
        Matrix4::new(
            ch, 0.0, sh, 0.0, //
            0.0, ch, 0.0, -sh, //
            sh, 0.0, ch, 0.0, //
            0.0, -sh, 0.0, ch,
        )
    }
}
