//! All-optical readout of the mechanical covariance through a second,
//! strongly damped cavity.
//!
//! In the bad-cavity limit the readout cavity's output is
//! `c_out = (i G2 / sqrt(2 kappa2)) b + c_in`. In quadratures the factor `i`
//! is the quarter-turn `R = [[0, -1], [1, 0]]` acting on `(q, p)`, and the
//! vacuum input adds the identity:
//!
//! ```text
//! V_out = g^2 R V_mec R^T + I,    g = G2 / sqrt(2 kappa2)
//! ```
//!
//! Only the mechanical block is handled here. Recovering the
//! optical-mechanical correlation block from joint output records is not
//! modelled.

use std::io::{self, Write};

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::sweep::format_sig;
use crate::{Error, Result};

/// Ratio below which a rotating-wave or bad-cavity assumption is flagged.
pub const RWA_RATIO: f64 = 10.0;

const NOISE_FLOOR_TOL: f64 = 1e-9;
const INCONSISTENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionParams {
    /// Decay rate of the readout cavity.
    pub kappa2: f64,
    /// Effective coupling of the readout cavity to the mechanics.
    pub g2: f64,
    /// Effective detuning of the readout cavity; the scheme tunes it to `omega_m`.
    pub delta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RwaWarning {
    /// `delta2 != omega_m`.
    DetuningOffResonance,
    /// `omega_m / kappa2 < 10`.
    NotResolvedSideband,
    /// `kappa2 / g2 < 10`.
    NotBadCavity,
}

impl std::fmt::Display for RwaWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RwaWarning::DetuningOffResonance => "readout detuning differs from omega_m",
            RwaWarning::NotResolvedSideband => "omega_m / kappa2 < 10: rotating-wave approximation is poor",
            RwaWarning::NotBadCavity => "kappa2 / g2 < 10: readout cavity is not in the bad-cavity limit",
        })
    }
}

impl DetectionParams {
    /// Readout cavity tuned to the mechanical sideband (`delta2 = omega_m = 1`).
    pub fn new(kappa2: f64, g2: f64) -> Result<Self> {
        let p = DetectionParams { kappa2, g2, delta2: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa2 > 0.0 && self.kappa2.is_finite()) {
            return Err(Error::param("kappa2", format!("must be > 0, got {}", self.kappa2)));
        }
        if !(self.g2 > 0.0 && self.g2.is_finite()) {
            return Err(Error::param("g2", format!("must be > 0, got {}", self.g2)));
        }
        if !self.delta2.is_finite() {
            return Err(Error::param("delta2", "must be finite"));
        }
        Ok(())
    }

    /// Output gain `G2 / sqrt(2 kappa2)`.
    pub fn gain(&self) -> f64 {
        self.g2 / (2.0 * self.kappa2).sqrt()
    }

    /// Assumptions of the readout model that do not hold (with `omega_m = 1`).
    pub fn warnings(&self) -> Vec<RwaWarning> {
        let omega_m = 1.0;
        let mut out = Vec::new();
        if self.delta2 != omega_m {
            out.push(RwaWarning::DetuningOffResonance);
        }
        if omega_m / self.kappa2 < RWA_RATIO {
            out.push(RwaWarning::NotResolvedSideband);
        }
        if self.kappa2 / self.g2 < RWA_RATIO {
            out.push(RwaWarning::NotBadCavity);
        }
        out
    }
}

/// Quarter-turn rotation `[[0, -1], [1, 0]]` induced by the factor `i`.
pub fn quarter_turn() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputModel {
    pub gain: f64,
    pub rotation: Matrix2<f64>,
    pub v_out: Matrix2<f64>,
    pub warnings: Vec<RwaWarning>,
}

impl OutputModel {
    /// The added noise never takes the output below the vacuum level.
    pub fn above_noise_floor(&self) -> bool {
        min_eigenvalue(&self.v_out) >= 1.0 - NOISE_FLOOR_TOL
    }
}

/// Covariance of the readout cavity's output quadratures.
pub fn output_covariance(v_mec: &Matrix2<f64>, det: &DetectionParams) -> Result<OutputModel> {
    det.validate()?;
    if v_mec.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("mechanical covariance is not finite".into()));
    }
    let g = det.gain();
    let r = quarter_turn();
    let v_out = r * v_mec * r.transpose() * (g * g) + Matrix2::identity();
    Ok(OutputModel { gain: g, rotation: r, v_out, warnings: det.warnings() })
}

fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Linear inversion of [`output_covariance`] without the vacuum-floor check.
fn invert_output(v_out: &Matrix2<f64>, g: f64) -> Matrix2<f64> {
    let r = quarter_turn();
    r.transpose() * (v_out - Matrix2::identity()) * r / (g * g)
}

/// Mechanical covariance implied by a measured output covariance.
pub fn reconstruct_mechanical(v_out: &Matrix2<f64>, det: &DetectionParams) -> Result<Matrix2<f64>> {
    det.validate()?;
    let g = det.gain();
    if !(g > 0.0) {
        return Err(Error::param("g2", "gain must be positive"));
    }
    let excess = v_out - Matrix2::identity();
    let lmin = min_eigenvalue(&((excess + excess.transpose()) * 0.5));
    if lmin < -INCONSISTENT_TOL {
        return Err(Error::InconsistentMeasurement { min_eigenvalue: lmin });
    }
    Ok(invert_output(v_out, g))
}

/// Homodyne snapshots of the two output quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    pub records: Vec<[f64; 2]>,
}

impl RecordSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Two columns `x,p` with a header, 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,p")?;
        for [x, p] in &self.records {
            writeln!(out, "{},{}", format_sig(*x), format_sig(*p))?;
        }
        Ok(())
    }
}

/// Draw `m` zero-mean Gaussian records with covariance `v_out`, using a
/// ChaCha8 stream seeded by `seed` and the Cholesky factor of `v_out`.
pub fn sample_output_records(v_out: &Matrix2<f64>, m: usize, seed: u64) -> Result<RecordSet> {
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 records, got {m}")));
    }
    if (v_out - v_out.transpose()).amax() > 1e-12 * v_out.amax() {
        return Err(Error::Input("output covariance is not symmetric".into()));
    }
    let chol = v_out.cholesky().ok_or(Error::Physicality {
        what: "output covariance eigenvalue",
        value: min_eigenvalue(v_out),
    })?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..m)
        .map(|_| {
            let z = Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let x = l * z;
            [x[0], x[1]]
        })
        .collect();
    Ok(RecordSet { records })
}

/// Sample covariance of a record set with per-entry standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    /// Unbiased sample covariance.
    pub cov: Matrix2<f64>,
    /// Standard error of each entry of `cov`, from the spread of the centred
    /// products `(x_i - mean_i)(x_j - mean_j)`.
    pub std_err: Matrix2<f64>,
    pub samples: usize,
    /// The estimate is not positive definite (e.g. constant records).
    pub degenerate: bool,
}

pub fn estimate_covariance(records: &RecordSet) -> Result<CovarianceEstimate> {
    let m = records.len();
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 records, got {m}")));
    }
    let mf = m as f64;
    let mean = records
        .records
        .iter()
        .fold(Vector2::zeros(), |acc, r| acc + Vector2::new(r[0], r[1]))
        / mf;

    let mut sum = Matrix2::<f64>::zeros();
    for r in &records.records {
        let c = Vector2::new(r[0] - mean[0], r[1] - mean[1]);
        sum += c * c.transpose();
    }
    let cov = sum / (mf - 1.0);

    let biased = sum / mf;
    let mut spread = Matrix2::<f64>::zeros();
    for r in &records.records {
        let c = Vector2::new(r[0] - mean[0], r[1] - mean[1]);
        let dev = c * c.transpose() - biased;
        spread += dev.component_mul(&dev);
    }
    let std_err = (spread / (mf - 1.0) / mf).map(f64::sqrt);

    let degenerate = !(cov.determinant() > 0.0 && cov[(0, 0)] > 0.0);
    Ok(CovarianceEstimate { cov, std_err, samples: m, degenerate })
}

/// Mechanical covariance inferred from an estimated output covariance, with
/// standard errors carried through the linear inversion. No vacuum-floor
/// check is applied: sampling noise may legitimately dip below it.
pub fn reconstruct_estimate(
    est: &CovarianceEstimate,
    det: &DetectionParams,
) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    det.validate()?;
    let g = det.gain();
    let r = quarter_turn();
    let v = invert_output(&est.cov, g);
    // R is a signed permutation, so errors move with their entries.
    let se = (r.transpose() * est.std_err * r).map(f64::abs) / (g * g);
    Ok((v, se))
}
