//! Parameter sweeps over one or two axes, emitted as deterministic CSV.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::gaussian::{coherence_difference, CoherenceReport, GaussianState};
use crate::model::{
    build_diffusion, build_drift, solve_steady_state, stability_routh_hurwitz, SteadyState,
    SystemParams, Verdict,
};
use crate::steady::solve_lyapunov;
use crate::{Error, Result};

/// Format with 12 significant digits, then print the shortest decimal that
/// represents the rounded value.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded = round_sig(x);
    let mag = rounded.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    GammaM,
    Kappa,
    Delta0,
    G0,
    DriveE,
    NTh,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::GammaM,
        SweepParam::Kappa,
        SweepParam::Delta0,
        SweepParam::G0,
        SweepParam::DriveE,
        SweepParam::NTh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::GammaM => "gamma_m",
            SweepParam::Kappa => "kappa",
            SweepParam::Delta0 => "delta0",
            SweepParam::G0 => "g0",
            SweepParam::DriveE => "drive_e",
            SweepParam::NTh => "n_th",
        }
    }

    pub fn apply(self, params: &mut SystemParams, value: f64) {
        let slot = match self {
            SweepParam::GammaM => &mut params.gamma_m,
            SweepParam::Kappa => &mut params.kappa,
            SweepParam::Delta0 => &mut params.delta0,
            SweepParam::G0 => &mut params.g0,
            SweepParam::DriveE => &mut params.drive_e,
            SweepParam::NTh => &mut params.n_th,
        };
        *slot = value;
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Config {
            key: s.to_string(),
            reason: format!(
                "not a sweepable parameter (expected one of {})",
                SweepParam::ALL.map(|p| p.name()).join(", ")
            ),
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// One sweep axis: either an evenly spaced range or explicit values.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Range { param: SweepParam, from: f64, to: f64, points: usize, scale: Scale },
    Values { param: SweepParam, values: Vec<f64> },
}

impl Axis {
    pub fn param(&self) -> SweepParam {
        match self {
            Axis::Range { param, .. } | Axis::Values { param, .. } => *param,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let err = |reason: String| Error::Config { key: key.to_string(), reason };
        match self {
            Axis::Range { from, to, points, scale, .. } => {
                if *points < 2 {
                    return Err(err(format!("points must be >= 2, got {points}")));
                }
                if !(from.is_finite() && to.is_finite()) || from >= to {
                    return Err(err(format!("need finite from < to, got {from} .. {to}")));
                }
                if *scale == Scale::Log && *from <= 0.0 {
                    return Err(err(format!("log scale needs from > 0, got {from}")));
                }
            }
            Axis::Values { values, .. } => {
                if values.is_empty() {
                    return Err(err("values must not be empty".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(err("values must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Grid values, rounded to 12 significant digits so that endpoints and
    /// decades come out exact.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values { values, .. } => values.clone(),
            Axis::Range { from, to, points, scale, .. } => {
                let n = *points;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            return *to;
                        }
                        let t = i as f64 / (n - 1) as f64;
                        let x = match scale {
                            Scale::Linear => from + (to - from) * t,
                            Scale::Log => (from.ln() + (to.ln() - from.ln()) * t).exp(),
                        };
                        round_sig(x)
                    })
                    .collect()
            }
        }
    }
}

/// CSV columns, in their fixed output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    DriveE,
    G0,
    Kappa,
    GammaM,
    Delta0,
    NTh,
    QS,
    AlphaS,
    DeltaEff,
    GEff,
    Stable,
    Nu1,
    Nu2,
    CMec,
    COpt,
    CTot,
    DeltaC,
    MutualInfo,
}

impl Column {
    pub const ALL: [Column; 18] = [
        Column::DriveE,
        Column::G0,
        Column::Kappa,
        Column::GammaM,
        Column::Delta0,
        Column::NTh,
        Column::QS,
        Column::AlphaS,
        Column::DeltaEff,
        Column::GEff,
        Column::Stable,
        Column::Nu1,
        Column::Nu2,
        Column::CMec,
        Column::COpt,
        Column::CTot,
        Column::DeltaC,
        Column::MutualInfo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::DriveE => "drive_e",
            Column::G0 => "g0",
            Column::Kappa => "kappa",
            Column::GammaM => "gamma_m",
            Column::Delta0 => "delta0",
            Column::NTh => "n_th",
            Column::QS => "q_s",
            Column::AlphaS => "alpha_s",
            Column::DeltaEff => "delta_eff",
            Column::GEff => "g_eff",
            Column::Stable => "stable",
            Column::Nu1 => "nu1",
            Column::Nu2 => "nu2",
            Column::CMec => "c_mec",
            Column::COpt => "c_opt",
            Column::CTot => "c_tot",
            Column::DeltaC => "delta_c",
            Column::MutualInfo => "mutual_info",
        }
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Column::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Config {
            key: "outputs".into(),
            reason: format!("unknown column `{s}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    /// Selected columns; kept in the canonical column order.
    pub outputs: Vec<Column>,
}

impl SweepSpec {
    pub fn new(base: SystemParams, axis1: Axis, axis2: Option<Axis>) -> Self {
        SweepSpec { base, axis1, axis2, outputs: Column::ALL.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| match e {
            Error::Parameter { name, reason } => {
                Error::Config { key: format!("base.{name}"), reason }
            }
            other => other,
        })?;
        self.axis1.validate("axis1")?;
        if let Some(axis2) = &self.axis2 {
            axis2.validate("axis2")?;
            if axis2.param() == self.axis1.param() {
                return Err(Error::Config {
                    key: "axis2".into(),
                    reason: format!("sweeps the same parameter as axis1 ({})", axis2.param()),
                });
            }
        }
        if self.outputs.is_empty() {
            return Err(Error::Config { key: "outputs".into(), reason: "no columns selected".into() });
        }
        Ok(())
    }

    /// Parameter sets in grid order: axis2-major, then axis1.
    pub fn grid(&self) -> Vec<SystemParams> {
        let outer: Vec<Option<f64>> = match &self.axis2 {
            Some(axis) => axis.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        let inner = self.axis1.values();
        let mut grid = Vec::with_capacity(outer.len() * inner.len());
        for o in &outer {
            for &i in &inner {
                let mut p = self.base;
                if let (Some(axis), Some(v)) = (&self.axis2, o) {
                    axis.param().apply(&mut p, *v);
                }
                self.axis1.param().apply(&mut p, i);
                grid.push(p);
            }
        }
        grid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Evaluated(Verdict),
    Failed(String),
}

impl RowStatus {
    pub fn token(&self) -> &'static str {
        match self {
            RowStatus::Evaluated(v) => match v {
                Verdict::Stable => "stable",
                Verdict::Marginal => "marginal",
                Verdict::Unstable => "unstable",
            },
            RowStatus::Failed(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: SystemParams,
    pub steady: Option<SteadyState>,
    pub status: RowStatus,
    /// Present only for stable, successfully evaluated points.
    pub coherence: Option<CoherenceReport>,
}

impl SweepRow {
    pub fn is_stable(&self) -> bool {
        self.status == RowStatus::Evaluated(Verdict::Stable) && self.coherence.is_some()
    }
}

/// Evaluate one grid point. Failures are recorded in the row.
pub fn evaluate_point(params: &SystemParams) -> SweepRow {
    let mut row = SweepRow {
        params: *params,
        steady: None,
        status: RowStatus::Failed(String::new()),
        coherence: None,
    };
    let steady = match solve_steady_state(params) {
        Ok(s) => s,
        Err(e) => {
            row.status = RowStatus::Failed(e.to_string());
            return row;
        }
    };
    let verdict = stability_routh_hurwitz(params, &steady).verdict;
    let drift = build_drift(params, &steady);
    row.steady = Some(steady);
    if verdict != Verdict::Stable {
        row.status = RowStatus::Evaluated(verdict);
        return row;
    }
    let report = solve_lyapunov(&drift, &build_diffusion(params)).and_then(|sol| {
        let s = row.steady.as_ref().expect("set above");
        let d = nalgebra::Vector4::new(s.q_s, s.p_s, 2.0 * s.alpha_s, 0.0);
        coherence_difference(&GaussianState::two_mode(&sol.v, &d)?)
    });
    match report {
        Ok(r) => {
            row.status = RowStatus::Evaluated(Verdict::Stable);
            row.coherence = Some(r);
        }
        Err(e) => row.status = RowStatus::Failed(e.to_string()),
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub columns: Vec<Column>,
    pub rows: Vec<SweepRow>,
}

/// Evaluate every grid point (in parallel) and assemble rows in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec.grid().par_iter().map(evaluate_point).collect();
    let mut columns = spec.outputs.clone();
    columns.sort_by_key(|c| Column::ALL.iter().position(|x| x == c));
    columns.dedup();
    Ok(SweepResult { columns, rows })
}

fn cell(row: &SweepRow, col: Column) -> String {
    let p = &row.params;
    let num = |x: Option<f64>| x.map(format_sig).unwrap_or_default();
    let st = row.steady.as_ref();
    let co = row.coherence.as_ref();
    match col {
        Column::DriveE => format_sig(p.drive_e),
        Column::G0 => format_sig(p.g0),
        Column::Kappa => format_sig(p.kappa),
        Column::GammaM => format_sig(p.gamma_m),
        Column::Delta0 => format_sig(p.delta0),
        Column::NTh => format_sig(p.n_th),
        Column::QS => num(st.map(|s| s.q_s)),
        Column::AlphaS => num(st.map(|s| s.alpha_s)),
        Column::DeltaEff => num(st.map(|s| s.delta_eff)),
        Column::GEff => num(st.map(|s| s.g_eff)),
        Column::Stable => row.status.token().to_string(),
        Column::Nu1 => num(co.map(|c| c.nu1)),
        Column::Nu2 => num(co.map(|c| c.nu2)),
        Column::CMec => num(co.map(|c| c.c_mec)),
        Column::COpt => num(co.map(|c| c.c_opt)),
        Column::CTot => num(co.map(|c| c.c_tot)),
        Column::DeltaC => num(co.map(|c| c.delta_c)),
        Column::MutualInfo => num(co.map(|c| c.mutual_info)),
    }
}

impl SweepResult {
    pub fn header(&self) -> String {
        self.columns.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self, row: &SweepRow) -> String {
        self.columns.iter().map(|&c| cell(row, c)).collect::<Vec<_>>().join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header())?;
        for row in &self.rows {
            writeln!(out, "{}", self.csv_row(row))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        SystemParams::new(0.01, 0.1, 1.0, 1e-4, 500.0, 10.0)
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(0.1), "0.1");
        assert_eq!(format_sig(1e-4), "0.0001");
        assert_eq!(format_sig(500.0), "500");
        assert_eq!(format_sig(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_sig(123456.7890123456), "123456.789012");
        assert_eq!(format_sig(-1.5e-9), "-1.5e-9");
        assert_eq!(format_sig(6.02214076e23), "6.02214076e23");
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
    }

    #[test]
    fn axis_values() {
        let lin = Axis::Range { param: SweepParam::DriveE, from: 0.0, to: 500.0, points: 11, scale: Scale::Linear };
        assert_eq!(lin.values(), (0..=10).map(|i| 50.0 * i as f64).collect::<Vec<_>>());
        let log = Axis::Range { param: SweepParam::NTh, from: 1.0, to: 100.0, points: 3, scale: Scale::Log };
        assert_eq!(log.values(), vec![1.0, 10.0, 100.0]);
        let log = Axis::Range { param: SweepParam::Kappa, from: 0.1, to: 10.0, points: 21, scale: Scale::Log };
        let v = log.values();
        assert_eq!((v[0], v[10], v[20]), (0.1, 1.0, 10.0));
    }

    #[test]
    fn axis_validation() {
        let bad = |axis: Axis| axis.validate("axis1").unwrap_err();
        let r = |from, to, points, scale| Axis::Range { param: SweepParam::G0, from, to, points, scale };
        assert!(matches!(bad(r(0.0, 1.0, 1, Scale::Linear)), Error::Config { .. }));
        assert!(matches!(bad(r(1.0, 1.0, 5, Scale::Linear)), Error::Config { .. }));
        assert!(matches!(bad(r(0.0, 1.0, 5, Scale::Log)), Error::Config { .. }));
        assert!(matches!(bad(Axis::Values { param: SweepParam::G0, values: vec![] }), Error::Config { .. }));
        assert!("omega_m".parse::<SweepParam>().is_err());
    }

    #[test]
    fn grid_is_axis2_major() {
        let spec = SweepSpec::new(
            base(),
            Axis::Values { param: SweepParam::DriveE, values: vec![1.0, 2.0, 3.0] },
            Some(Axis::Values { param: SweepParam::G0, values: vec![1e-4, 1e-3] }),
        );
        let g: Vec<(f64, f64)> = spec.grid().iter().map(|p| (p.g0, p.drive_e)).collect();
        assert_eq!(
            g,
            vec![(1e-4, 1.0), (1e-4, 2.0), (1e-4, 3.0), (1e-3, 1.0), (1e-3, 2.0), (1e-3, 3.0)]
        );
    }

    #[test]
    fn unstable_rows_are_not_fabricated() {
        let spec = SweepSpec::new(
            base(),
            Axis::Values { param: SweepParam::DriveE, values: vec![300.0, 500.0] },
            Some(Axis::Values { param: SweepParam::G0, values: vec![1e-3] }),
        );
        let res = run_sweep(&spec).unwrap();
        let csv = res.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "drive_e,g0,kappa,gamma_m,delta0,n_th,q_s,alpha_s,delta_eff,g_eff,stable,nu1,nu2,c_mec,c_opt,c_tot,delta_c,mutual_info"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(",stable,"));
        assert!(lines[2].ends_with(",unstable,,,,,,,"), "{}", lines[2]);
        assert!(res.rows[0].is_stable());
        assert!(!res.rows[1].is_stable());
    }

    #[test]
    fn column_selection_keeps_canonical_order() {
        let mut spec = SweepSpec::new(
            base(),
            Axis::Values { param: SweepParam::DriveE, values: vec![0.0] },
            None,
        );
        spec.outputs = vec![Column::CTot, Column::DriveE];
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.to_csv(), "drive_e,c_tot\n0,0\n");
    }

    #[test]
    fn invalid_point_is_recorded_in_row() {
        let row = evaluate_point(&SystemParams::new(0.01, 0.1, 1.0, -1.0, 1.0, 1.0));
        assert!(matches!(row.status, RowStatus::Failed(_)));
        assert_eq!(row.status.token(), "error");
    }
}
