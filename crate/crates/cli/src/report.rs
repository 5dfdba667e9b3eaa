use std::io::Write;

use optomech::detect::reconstruct_estimate;
use optomech::sweep::{evaluate_point, format_sig, Column};
use optomech::{
    build_drift, estimate_covariance, output_covariance, reconstruct_mechanical,
    rwa_mechanical_variance, sample_output_records, solve_steady_state, stability_routh_hurwitz,
    stability_spectral, steady_covariance, symplectic_eigenvalues, DetectionParams, RecordSet,
    RouthHurwitz, SteadyState, SweepResult, SystemParams, Verdict,
};

use crate::{CmdResult, Failure};

const SIGMA_LIMIT: f64 = 5.0;

pub struct PointCsv {
    pub text: String,
    pub outcome: CmdResult,
}

fn fmt(x: f64) -> String {
    format_sig(x)
}

fn matrix(out: &mut impl Write, n: usize, at: impl Fn(usize, usize) -> f64) {
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:>20}", fmt(at(i, j)))).collect();
        writeln!(out, "  {}", row.join(" ")).ok();
    }
}

fn header(out: &mut impl Write, p: &SystemParams) {
    writeln!(out, "# rates in units of omega_m = 1; entropies in nats (natural logarithm)").ok();
    writeln!(
        out,
        "parameters: gamma_m={} kappa={} delta0={} g0={} drive_e={} n_th={}",
        fmt(p.gamma_m),
        fmt(p.kappa),
        fmt(p.delta0),
        fmt(p.g0),
        fmt(p.drive_e),
        fmt(p.n_th)
    )
    .ok();
}

fn working_point(out: &mut impl Write, s: &SteadyState) {
    writeln!(out, "working point:").ok();
    writeln!(out, "  q_s       = {}", fmt(s.q_s)).ok();
    writeln!(out, "  p_s       = {}", fmt(s.p_s)).ok();
    writeln!(out, "  alpha_s   = {}", fmt(s.alpha_s)).ok();
    writeln!(out, "  n_c       = {}", fmt(s.n_c)).ok();
    writeln!(out, "  delta_eff = {}", fmt(s.delta_eff)).ok();
    writeln!(out, "  g_eff     = {}", fmt(s.g_eff)).ok();
    if s.is_multistable() {
        writeln!(
            out,
            "warning: {} steady-state branches; using the one with the fewest photons",
            s.branches.len()
        )
        .ok();
        for (i, b) in s.branches.iter().enumerate() {
            writeln!(out, "  branch {i}: n_c = {}, delta_eff = {}", fmt(b.n_c), fmt(b.delta_eff)).ok();
        }
    }
}

fn margins(out: &mut impl Write, rh: &RouthHurwitz) {
    writeln!(out, "stability (Routh-Hurwitz):").ok();
    writeln!(out, "  static margin  = {}", fmt(rh.static_margin)).ok();
    writeln!(out, "  dynamic margin = {}", fmt(rh.dynamic_margin)).ok();
    writeln!(out, "  verdict        = {}", rh.verdict).ok();
}

fn not_stable(rh: &RouthHurwitz) -> Failure {
    Failure::Unstable(format!(
        "working point is {}: margins ({}, {})",
        rh.verdict,
        fmt(rh.static_margin),
        fmt(rh.dynamic_margin)
    ))
}

pub fn point(out: &mut impl Write, p: &SystemParams) -> Result<PointCsv, Failure> {
    p.validate()?;
    header(out, p);
    let steady = solve_steady_state(p)?;
    working_point(out, &steady);
    let rh = stability_routh_hurwitz(p, &steady);
    margins(out, &rh);

    let csv = SweepResult { columns: Column::ALL.to_vec(), rows: vec![evaluate_point(p)] }.to_csv();

    if rh.verdict != Verdict::Stable {
        writeln!(out, "covariance and coherence are undefined (verdict: {})", rh.verdict).ok();
        write!(out, "csv:\n{csv}").ok();
        return Ok(PointCsv { text: csv, outcome: Err(not_stable(&rh)) });
    }

    let pt = steady_covariance(p)?;
    writeln!(out, "steady covariance V (q, p, X, Y):").ok();
    matrix(out, 4, |i, j| pt.solution.v[(i, j)]);
    writeln!(out, "  Lyapunov residual |A V + V A^T + D|_F = {}", fmt(pt.solution.residual)).ok();

    let state = pt.state()?;
    let spectrum = symplectic_eigenvalues(&state)?;
    let nus: Vec<String> = spectrum.nus.iter().map(|&x| fmt(x)).collect();
    writeln!(out, "symplectic eigenvalues: {}", nus.join(", ")).ok();

    let c = pt.coherence()?;
    writeln!(out, "coherence:").ok();
    writeln!(out, "  c_mec       = {}", fmt(c.c_mec)).ok();
    writeln!(out, "  c_opt       = {}", fmt(c.c_opt)).ok();
    writeln!(out, "  c_tot       = {}", fmt(c.c_tot)).ok();
    writeln!(out, "  delta_c     = {}", fmt(c.delta_c)).ok();
    writeln!(out, "  mutual_info = {}", fmt(c.mutual_info)).ok();

    let rwa = rwa_mechanical_variance(p, &pt.steady);
    writeln!(
        out,
        "rotating-wave mechanical variance (n_th + 1/2 normalization): {}{}",
        fmt(rwa.value),
        if rwa.regime_ok { "" } else { " (outside omega_m >= 10 max(G, kappa); unreliable)" }
    )
    .ok();
    write!(out, "csv:\n{csv}").ok();
    Ok(PointCsv { text: csv, outcome: Ok(()) })
}

pub fn stability(out: &mut impl Write, p: &SystemParams) -> CmdResult {
    p.validate()?;
    header(out, p);
    let steady = solve_steady_state(p)?;
    working_point(out, &steady);
    let rh = stability_routh_hurwitz(p, &steady);
    margins(out, &rh);
    let spectral = stability_spectral(&build_drift(p, &steady))?;
    writeln!(out, "drift eigenvalues:").ok();
    for z in &spectral.eigenvalues {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        writeln!(out, "  {} {sign} {}i", fmt(z.re), fmt(z.im.abs())).ok();
    }
    writeln!(out, "  spectral abscissa = {}", fmt(spectral.abscissa)).ok();
    writeln!(
        out,
        "  spectral verdict  = {}",
        if spectral.stable { "stable" } else { "unstable" }
    )
    .ok();
    if rh.verdict == Verdict::Stable {
        Ok(())
    } else {
        Err(not_stable(&rh))
    }
}

pub fn detect(
    out: &mut impl Write,
    p: &SystemParams,
    det: &DetectionParams,
    samples: usize,
    seed: u64,
) -> Result<RecordSet, Failure> {
    header(out, p);
    writeln!(
        out,
        "readout: kappa2={} g2={} gain g={} samples={samples} seed={seed}",
        fmt(det.kappa2),
        fmt(det.g2),
        fmt(det.gain())
    )
    .ok();
    for w in det.warnings() {
        writeln!(out, "warning: {w}").ok();
    }

    let pt = steady_covariance(p)?;
    let v_mec = pt.mechanical_block();
    let model = output_covariance(&v_mec, det)?;
    let exact = reconstruct_mechanical(&model.v_out, det)?;
    let exact_err = (exact - v_mec).abs().max();

    writeln!(out, "true mechanical covariance:").ok();
    matrix(out, 2, |i, j| v_mec[(i, j)]);
    writeln!(out, "output covariance:").ok();
    matrix(out, 2, |i, j| model.v_out[(i, j)]);
    writeln!(out, "exact reconstruction (max |error| = {}):", fmt(exact_err)).ok();
    matrix(out, 2, |i, j| exact[(i, j)]);

    let records = sample_output_records(&model.v_out, samples, seed)?;
    let est = estimate_covariance(&records)?;
    let (v, se) = reconstruct_estimate(&est, det)?;
    if est.degenerate {
        writeln!(out, "warning: sample covariance is degenerate").ok();
    }
    writeln!(out, "statistical reconstruction:").ok();
    writeln!(
        out,
        "  {:<6} {:>20} {:>20} {:>20} {:>10}",
        "entry", "true", "estimate", "std_err", "z"
    )
    .ok();
    let mut all_within = true;
    for (name, ij) in [("qq", (0, 0)), ("qp", (0, 1)), ("pp", (1, 1))] {
        let z = (v[ij] - v_mec[ij]) / se[ij];
        all_within &= z.abs() <= SIGMA_LIMIT;
        writeln!(
            out,
            "  {:<6} {:>20} {:>20} {:>20} {:>10.3}",
            name,
            fmt(v_mec[ij]),
            fmt(v[ij]),
            fmt(se[ij]),
            z
        )
        .ok();
    }
    writeln!(
        out,
        "{}: every entry within {SIGMA_LIMIT} standard errors",
        if all_within { "PASS" } else { "FAIL" }
    )
    .ok();
    Ok(records)
}
