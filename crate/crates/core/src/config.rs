//! JSON configuration files and built-in presets.
//!
//! A point config is a flat object of rates:
//!
//! ```json
//! {"gamma_m": 0.01, "kappa": 0.1, "delta0": 1.0, "g0": 1e-4, "drive_e": 500, "n_th": 10}
//! ```
//!
//! A sweep config names a base (inline object or preset name) and up to two
//! axes, each either a range or an explicit list:
//!
//! ```json
//! {
//!   "base": "fig1",
//!   "axis1": {"param": "drive_e", "from": 0, "to": 500, "points": 11, "scale": "linear"},
//!   "axis2": {"param": "g0", "values": [1e-4, 5e-4, 1e-3]},
//!   "outputs": ["drive_e", "g0", "c_tot"]
//! }
//! ```
//!
//! Unknown keys are rejected. All rates are in units of `omega_m`.

use std::path::Path;

use serde_json::{Map, Value};

use crate::model::SystemParams;
use crate::sweep::{Axis, Column, Scale, SweepParam, SweepSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Point(SystemParams),
    Sweep(SweepSpec),
}

fn config_err(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config { key: key.into(), reason: reason.into() }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Config> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| config_err("<document>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| config_err("<document>", "top level must be an object"))?;
    if obj.contains_key("axis1") {
        parse_sweep(obj).map(Config::Sweep)
    } else {
        parse_params(obj, "").map(Config::Point)
    }
}

const PARAM_KEYS: [&str; 7] = ["omega_m", "gamma_m", "kappa", "delta0", "g0", "drive_e", "n_th"];

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(config_err(format!("{prefix}{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn number(obj: &Map<String, Value>, key: &str, prefix: &str) -> Result<f64> {
    match obj.get(key) {
        None => Err(config_err(format!("{prefix}{key}"), "missing")),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| config_err(format!("{prefix}{key}"), format!("expected a number, got {v}"))),
    }
}

fn parse_params(obj: &Map<String, Value>, prefix: &str) -> Result<SystemParams> {
    check_keys(obj, &PARAM_KEYS, prefix)?;
    if obj.contains_key("omega_m") {
        let w = number(obj, "omega_m", prefix)?;
        if w != 1.0 {
            return Err(config_err(
                format!("{prefix}omega_m"),
                "rates are in units of omega_m, which must be 1",
            ));
        }
    }
    let p = SystemParams::new(
        number(obj, "gamma_m", prefix)?,
        number(obj, "kappa", prefix)?,
        number(obj, "delta0", prefix)?,
        number(obj, "g0", prefix)?,
        number(obj, "drive_e", prefix)?,
        number(obj, "n_th", prefix)?,
    );
    p.validate().map_err(|e| match e {
        Error::Parameter { name, reason } => config_err(format!("{prefix}{name}"), reason),
        other => other,
    })?;
    Ok(p)
}

fn parse_axis(value: &Value, key: &str) -> Result<Axis> {
    let obj = value.as_object().ok_or_else(|| config_err(key, "expected an object"))?;
    let prefix = format!("{key}.");
    let param = match obj.get("param").and_then(Value::as_str) {
        Some(name) => name.parse::<SweepParam>().map_err(|e| match e {
            Error::Config { reason, .. } => config_err(format!("{prefix}param"), reason),
            other => other,
        })?,
        None => return Err(config_err(format!("{prefix}param"), "missing or not a string")),
    };
    let axis = if obj.contains_key("values") {
        check_keys(obj, &["param", "values"], &prefix)?;
        let values = obj["values"]
            .as_array()
            .ok_or_else(|| config_err(format!("{prefix}values"), "expected an array"))?
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| config_err(format!("{prefix}values"), "expected numbers")))
            .collect::<Result<Vec<f64>>>()?;
        Axis::Values { param, values }
    } else {
        check_keys(obj, &["param", "from", "to", "points", "scale"], &prefix)?;
        let points = obj
            .get("points")
            .and_then(Value::as_u64)
            .ok_or_else(|| config_err(format!("{prefix}points"), "missing or not a positive integer"))?;
        let scale = match obj.get("scale").map(|v| v.as_str()) {
            None | Some(Some("linear")) => Scale::Linear,
            Some(Some("log")) => Scale::Log,
            Some(_) => return Err(config_err(format!("{prefix}scale"), "expected \"linear\" or \"log\"")),
        };
        Axis::Range {
            param,
            from: number(obj, "from", &prefix)?,
            to: number(obj, "to", &prefix)?,
            points: points as usize,
            scale,
        }
    };
    axis.validate(key)?;
    Ok(axis)
}

fn parse_sweep(obj: &Map<String, Value>) -> Result<SweepSpec> {
    check_keys(obj, &["base", "axis1", "axis2", "outputs"], "")?;
    let base = match obj.get("base") {
        None => return Err(config_err("base", "missing")),
        Some(Value::String(name)) => presets::point(name)
            .ok_or_else(|| config_err("base", format!("unknown preset `{name}`")))?,
        Some(Value::Object(o)) => parse_params(o, "base.")?,
        Some(_) => return Err(config_err("base", "expected an object or a preset name")),
    };
    let axis1 = parse_axis(&obj["axis1"], "axis1")?;
    let axis2 = obj.get("axis2").map(|v| parse_axis(v, "axis2")).transpose()?;
    let mut spec = SweepSpec::new(base, axis1, axis2);
    if let Some(outputs) = obj.get("outputs") {
        spec.outputs = outputs
            .as_array()
            .ok_or_else(|| config_err("outputs", "expected an array of column names"))?
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| config_err("outputs", "expected strings"))?
                    .parse::<Column>()
            })
            .collect::<Result<Vec<Column>>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Built-in parameter sets.
///
/// The `fig*` presets reproduce the parameter choices of the coherence
/// figures; the laboratory presets convert published device rates (in Hz)
/// to ratios with `omega_m = 1`.
pub mod presets {
    use super::*;

    #[derive(Debug, Clone, Copy)]
    pub struct PresetInfo {
        pub name: &'static str,
        pub has_sweep: bool,
        pub description: &'static str,
    }

    pub const ALL: [PresetInfo; 6] = [
        PresetInfo {
            name: "fig1",
            has_sweep: true,
            description: "coherence vs drive E for g0 in {1e-4, 5e-4, 1e-3}; gamma_m=0.01, kappa=0.1, delta0=1, n_th=10",
        },
        PresetInfo {
            name: "fig2",
            has_sweep: true,
            description: "coherence over (E, kappa), kappa in [0.1, 10]; gamma_m=0.01, g0=1e-3, delta0=1, n_th=10",
        },
        PresetInfo {
            name: "fig3",
            has_sweep: true,
            description: "coherence vs drive E for n_th in {1, 10, 100}; gamma_m=0.01, g0=1e-4, kappa=0.1, delta0=1",
        },
        PresetInfo {
            name: "fig4",
            has_sweep: true,
            description: "coherence difference over (E, g0), g0 in [1e-4, 1e-2]; gamma_m=0.01, kappa=10, delta0=1, n_th=10",
        },
        PresetInfo {
            name: "nist_microwave",
            has_sweep: false,
            description: "microwave electromechanics: omega_m/2pi=14.98 MHz, gamma_m/2pi=9.2 Hz, kappa/2pi=1.17 MHz, g0=145 Hz",
        },
        PresetInfo {
            name: "optomechanical_crystal",
            has_sweep: false,
            description: "optomechanical crystal: omega_m/2pi=3.68 GHz, gamma_m/2pi=35 kHz, kappa/2pi=500 MHz, g0/2pi=910 kHz",
        },
    ];

    /// Base parameter set of a preset.
    pub fn point(name: &str) -> Option<SystemParams> {
        Some(match name {
            "fig1" | "fig3" => SystemParams::new(0.01, 0.1, 1.0, 1e-4, 500.0, 10.0),
            "fig2" => SystemParams::new(0.01, 1.0, 1.0, 1e-3, 100.0, 10.0),
            "fig4" => SystemParams::new(0.01, 10.0, 1.0, 1e-2, 300.0, 10.0),
            "nist_microwave" => {
                let w = 14.98e6;
                SystemParams::new(9.2 / w, 1.17 / 14.98, 1.0, 145.0 / w, 1000.0, 10.0)
            }
            "optomechanical_crystal" => {
                let w = 3.68e9;
                SystemParams::new(35e3 / w, 500e6 / w, 1.0, 910e3 / w, 300.0, 10.0)
            }
            _ => return None,
        })
    }

    /// Sweep reproducing a figure.
    pub fn sweep(name: &str) -> Option<SweepSpec> {
        let drive = Axis::Range {
            param: SweepParam::DriveE,
            from: 0.0,
            to: 500.0,
            points: 11,
            scale: Scale::Linear,
        };
        let (axis1, axis2) = match name {
            "fig1" => (drive, Axis::Values { param: SweepParam::G0, values: vec![1e-4, 5e-4, 1e-3] }),
            "fig2" => (
                drive,
                Axis::Range { param: SweepParam::Kappa, from: 0.1, to: 10.0, points: 21, scale: Scale::Log },
            ),
            "fig3" => (drive, Axis::Values { param: SweepParam::NTh, values: vec![1.0, 10.0, 100.0] }),
            "fig4" => (
                drive,
                Axis::Range { param: SweepParam::G0, from: 1e-4, to: 1e-2, points: 21, scale: Scale::Log },
            ),
            _ => return None,
        };
        Some(SweepSpec::new(point(name)?, axis1, Some(axis2)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_config() {
        let cfg = parse_config(
            r#"{"gamma_m":0.01,"kappa":0.1,"delta0":1.0,"g0":1e-4,"drive_e":500,"n_th":10}"#,
        )
        .unwrap();
        assert_eq!(cfg, Config::Point(presets::point("fig1").unwrap()));
    }

    #[test]
    fn config_errors_name_the_key() {
        let key = |text: &str| match parse_config(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(
            key(r#"{"gamma_m":-1,"kappa":0.1,"delta0":1.0,"g0":1e-4,"drive_e":500,"n_th":10}"#),
            "gamma_m"
        );
        assert_eq!(key(r#"{"gamma_m":0.01,"delta0":1.0,"g0":1e-4,"drive_e":500,"n_th":10}"#), "kappa");
        assert_eq!(
            key(r#"{"gamma_m":0.01,"kappa":0.1,"delta0":1,"g0":0,"drive_e":1,"n_th":1,"temp":3}"#),
            "temp"
        );
        assert_eq!(
            key(r#"{"gamma_m":"x","kappa":0.1,"delta0":1,"g0":0,"drive_e":1,"n_th":1}"#),
            "gamma_m"
        );
        assert_eq!(
            key(r#"{"gamma_m":0.01,"kappa":0.1,"delta0":1,"g0":0,"drive_e":1,"n_th":1,"omega_m":2}"#),
            "omega_m"
        );
        assert_eq!(key("[1, 2]"), "<document>");
        assert_eq!(key(r#"{"base":"fig1","axis1":{"param":"omega_m","values":[1]}}"#), "axis1.param");
        assert_eq!(
            key(r#"{"base":"fig1","axis1":{"param":"g0","from":1,"to":0,"points":3}}"#),
            "axis1"
        );
        assert_eq!(key(r#"{"base":"nope","axis1":{"param":"g0","values":[1]}}"#), "base");
        assert_eq!(
            key(r#"{"base":{"gamma_m":0.01,"kappa":0,"delta0":1,"g0":0,"drive_e":1,"n_th":1},"axis1":{"param":"g0","values":[1]}}"#),
            "base.kappa"
        );
        assert_eq!(
            key(r#"{"base":"fig1","axis1":{"param":"g0","values":[1]},"outputs":["bogus"]}"#),
            "outputs"
        );
    }

    #[test]
    fn sweep_config() {
        let cfg = parse_config(
            r#"{
                "base": "fig1",
                "axis1": {"param": "drive_e", "from": 0, "to": 500, "points": 11, "scale": "linear"},
                "axis2": {"param": "g0", "values": [1e-4, 5e-4, 1e-3]}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg, Config::Sweep(presets::sweep("fig1").unwrap()));
    }

    #[test]
    fn laboratory_presets_are_ratios() {
        let p = presets::point("nist_microwave").unwrap();
        assert_eq!(p.gamma_m, 9.2 / 14.98e6);
        assert_eq!(p.kappa, 1.17 / 14.98);
        assert_eq!(p.g0, 145.0 / 14.98e6);
        let p = presets::point("optomechanical_crystal").unwrap();
        assert!((p.kappa - 0.135_869_565).abs() < 1e-8);
        for info in presets::ALL {
            assert!(presets::point(info.name).is_some());
            assert_eq!(presets::sweep(info.name).is_some(), info.has_sweep);
            presets::point(info.name).unwrap().validate().unwrap();
        }
    }
}
