//! Command-line front end for the optomechanical coherence toolkit.
//!
//! Exit codes: 0 success, 1 unstable or marginal requested point,
//! 2 configuration error, 3 numerical failure.

mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optomech::config::{load_config, presets, Config};
use optomech::{DetectionParams, Error, SweepSpec, SystemParams};

#[derive(Debug, Parser)]
#[command(name = "optomech", version, about = "Steady-state coherence of a driven optomechanical cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one parameter set: working point, covariance, coherence.
    Point {
        #[command(flatten)]
        source: Source,
        /// Write the CSV header and row to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a one- or two-axis parameter sweep and emit CSV.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Routh-Hurwitz margins and drift spectrum of one parameter set.
    Stability {
        #[command(flatten)]
        source: Source,
    },
    /// Simulate readout through a second cavity and reconstruct the
    /// mechanical covariance.
    Detect {
        #[command(flatten)]
        source: Source,
        /// Readout cavity decay rate.
        #[arg(long, default_value_t = 0.1)]
        kappa2: f64,
        /// Readout cavity coupling.
        #[arg(long, default_value_t = 0.01)]
        g2: f64,
        /// Number of homodyne records.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the sampled records as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in parameter presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetsAction {
    List,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset name (see `presets list`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Unstable(String),
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Unstable(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Unstable(m) | Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Parameter { .. } | Error::Input(_) => {
                Failure::Config(e.to_string())
            }
            Error::NotStable { .. } | Error::UnstableDrift { .. } => Failure::Unstable(e.to_string()),
            Error::Physicality { .. }
            | Error::Numerical(_)
            | Error::NotConverged { .. }
            | Error::InconsistentMeasurement { .. } => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

type CmdResult = Result<(), Failure>;

impl Source {
    fn load(&self) -> Result<Config, Failure> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok(load_config(path)?),
            (None, Some(name)) => match (presets::point(name), presets::sweep(name)) {
                (_, Some(spec)) => Ok(Config::Sweep(spec)),
                (Some(p), None) => Ok(Config::Point(p)),
                (None, None) => Err(Failure::Config(format!(
                    "unknown preset `{name}`; run `optomech presets list`"
                ))),
            },
            (None, None) => Err(Failure::Config("one of --config or --preset is required".into())),
        }
    }

    fn point(&self) -> Result<SystemParams, Failure> {
        if let Some(name) = &self.preset {
            return presets::point(name).ok_or_else(|| {
                Failure::Config(format!("unknown preset `{name}`; run `optomech presets list`"))
            });
        }
        match self.load()? {
            Config::Point(p) => Ok(p),
            Config::Sweep(_) => {
                Err(Failure::Config("expected a single-point config, found a sweep (axis1)".into()))
            }
        }
    }

    fn sweep(&self) -> Result<SweepSpec, Failure> {
        match self.load()? {
            Config::Sweep(s) => Ok(s),
            Config::Point(_) => match &self.preset {
                Some(name) => Err(Failure::Config(format!("preset `{name}` has no sweep"))),
                None => Err(Failure::Config("expected a sweep config with `axis1`".into())),
            },
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn run(cli: Cli) -> CmdResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Point { source, out: csv_path } => {
            let params = source.point()?;
            let csv = report::point(&mut out, &params)?;
            if let Some(path) = csv_path {
                let mut f = create(&path)?;
                f.write_all(csv.text.as_bytes())
                    .and_then(|_| f.flush())
                    .map_err(|e| io_failure(&path, e))?;
            }
            csv.outcome
        }
        Command::Sweep { source, out: path } => {
            let spec = source.sweep()?;
            let result = optomech::run_sweep(&spec)?;
            match path {
                Some(path) => {
                    let mut f = create(&path)?;
                    result.write_csv(&mut f).and_then(|_| f.flush()).map_err(|e| io_failure(&path, e))?;
                    let stable = result.rows.iter().filter(|r| r.is_stable()).count();
                    writeln!(
                        out,
                        "wrote {} rows ({stable} stable) to {}",
                        result.rows.len(),
                        path.display()
                    )
                    .ok();
                }
                None => {
                    result.write_csv(&mut out).map_err(|e| Failure::Numerical(e.to_string()))?;
                }
            }
            Ok(())
        }
        Command::Stability { source } => {
            let params = source.point()?;
            report::stability(&mut out, &params)
        }
        Command::Detect { source, kappa2, g2, samples, seed, out: path } => {
            let params = source.point()?;
            let det = DetectionParams::new(kappa2, g2)?;
            let records = report::detect(&mut out, &params, &det, samples, seed)?;
            if let Some(path) = path {
                let mut f = create(&path)?;
                records.write_csv(&mut f).and_then(|_| f.flush()).map_err(|e| io_failure(&path, e))?;
            }
            Ok(())
        }
        Command::Presets { action: PresetsAction::List } => {
            for info in presets::ALL {
                let kind = if info.has_sweep { "point+sweep" } else { "point" };
                writeln!(out, "{:<24} {:<12} {}", info.name, kind, info.description).ok();
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
