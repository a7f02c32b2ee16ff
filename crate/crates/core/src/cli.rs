//! The `ccc` command line: `factorize`, `orlicz`, `wasserstein` and `verify`.
//!
//! Reports are JSON on stdout (or `--out`) and embed the resolved
//! configuration. Failures print a JSON error object on stderr and exit with
//! 2 for invalid input or 3 for numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::gauge::{self, GaugeError};
use crate::scale::{
    log_grid, minimal_factorization, minimality_gap, verify_factorization, Factorization, ScaleError, ScaleSpec,
    DEFAULT_GRID_POINTS, DEFAULT_R_MAX,
};
use crate::spaces::{DiscreteMeasure, FiniteMetricSpace, MetricCheck, SampleFunction, SpaceError, WeightedSpace};
use crate::transport::{self, TransportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const MIN_GRID_POINTS: usize = 64;
pub const SEED_ENV: &str = "CCC_TRANSPORT_SEED";
pub const VERIFY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("reading {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let numerical = match self {
            CliError::Scale(e) => e.is_numerical(),
            CliError::Gauge(e) => e.is_numerical(),
            CliError::Transport(e) => e.is_numerical(),
            _ => false,
        };
        if numerical {
            EXIT_NUMERICAL
        } else {
            EXIT_VALIDATION
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Scale(_) => "scale",
            CliError::Space(_) => "input",
            CliError::Gauge(_) => "gauge",
            CliError::Transport(_) => "transport",
            CliError::Read { .. } | CliError::Write { .. } => "io",
            CliError::Manifest(_) => "manifest",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "ccc", version, about = "Factorizations, Orlicz-type distances and Wasserstein-type distances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Tabulate the minimal factorization of a scale function.
    Factorize(CommonArgs),
    /// Distance between two functions on a weighted space.
    Orlicz(CommonArgs),
    /// Distance between probability measures on a finite metric space.
    Wasserstein(CommonArgs),
    /// Check a factorization and, with --psi, its minimality.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scale function, e.g. power:2, exp_sqrt, compose:log1p,power:2, tabulated:table.csv
    #[arg(long = "fn", value_name = "SPEC")]
    pub scale: String,
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub nu: Option<PathBuf>,
    /// Distance matrix (.csv, or JSON with "dist" or "points")
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub f: Option<PathBuf>,
    #[arg(long)]
    pub g: Option<PathBuf>,
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Batch manifest {"pairs": [{"mu": .., "nu": ..}, ..]}, solved in parallel
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Convex factor to verify (defaults to the minimal one)
    #[arg(long)]
    pub phi: Option<String>,
    /// Concave factor to verify, and the candidate for the minimality check
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub r_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Skip the triangle-inequality check (only for spaces above 512 points)
    #[arg(long)]
    pub skip_metric_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Factorize,
    Orlicz,
    Wasserstein,
    Verify,
}

/// Fully resolved run configuration, echoed in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub scale_spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    pub tol: f64,
    pub grid_points: usize,
    pub r_max: f64,
    pub output_format: OutputFormat,
    pub skip_metric_check: bool,
    /// Echo of `CCC_TRANSPORT_SEED`; nothing here is randomized.
    pub seed: Option<String>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, a) = match cli.command {
            Commands::Factorize(a) => (Command::Factorize, a),
            Commands::Orlicz(a) => (Command::Orlicz, a),
            Commands::Wasserstein(a) => (Command::Wasserstein, a),
            Commands::Verify(a) => (Command::Verify, a),
        };
        let tol = a.tol.unwrap_or(match command {
            Command::Orlicz => gauge::DEFAULT_TOLERANCE,
            Command::Wasserstein => transport::DEFAULT_TOLERANCE,
            Command::Factorize | Command::Verify => VERIFY_TOLERANCE,
        });
        let config = RunConfig {
            command,
            scale_spec: a.scale,
            mu: a.mu,
            nu: a.nu,
            metric: a.metric,
            f: a.f,
            g: a.g,
            space: a.space,
            pairs: a.pairs,
            phi: a.phi,
            psi: a.psi,
            tol,
            grid_points: a.grid_points,
            r_max: a.r_max,
            output_format: a.format,
            skip_metric_check: a.skip_metric_check,
            seed: std::env::var(SEED_ENV).ok(),
            out: a.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Usage(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(CliError::Usage(format!(
                "--grid-points must be at least {MIN_GRID_POINTS}, got {}",
                self.grid_points
            )));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(CliError::Usage(format!("--r-max must be positive, got {}", self.r_max)));
        }
        let need = |flag: &str, v: &Option<PathBuf>| {
            v.as_ref()
                .map(|_| ())
                .ok_or_else(|| CliError::Usage(format!("{:?} needs --{flag}", self.command)))
        };
        let csv_ok = match self.command {
            Command::Factorize | Command::Verify => true,
            Command::Orlicz => {
                need("f", &self.f)?;
                need("g", &self.g)?;
                need("space", &self.space)?;
                false
            }
            Command::Wasserstein => {
                need("metric", &self.metric)?;
                if self.pairs.is_none() {
                    need("mu", &self.mu)?;
                    need("nu", &self.nu)?;
                }
                self.pairs.is_none()
            }
        };
        if self.output_format == OutputFormat::Csv && !csv_ok {
            return Err(CliError::Usage(
                "CSV output is available for factorization tables and single transport plans".into(),
            ));
        }
        Ok(())
    }

    fn metric_check(&self) -> MetricCheck {
        MetricCheck {
            skip_triangle: self.skip_metric_check,
        }
    }
}

/// A finished report: the document to write.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Json(Value),
    Csv(String),
}

impl Report {
    pub fn render(&self) -> String {
        match self {
            Report::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("report serializes");
                s.push('\n');
                s
            }
            Report::Csv(s) => s.clone(),
        }
    }
}

fn parse_spec(s: &str) -> Result<ScaleSpec, CliError> {
    Ok(ScaleSpec::parse(s)?)
}

fn factorize_spec(config: &RunConfig, spec: &ScaleSpec) -> Result<Factorization, CliError> {
    Ok(minimal_factorization(spec, config.grid_points, config.r_max)?)
}

fn required(p: &Option<PathBuf>) -> &Path {
    p.as_deref().expect("checked by RunConfig::validate")
}

/// Runs one command.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let spec = parse_spec(&config.scale_spec)?;
    let fact = factorize_spec(config, &spec)?;
    match config.command {
        Command::Factorize => factorize(config, &spec, &fact),
        Command::Orlicz => orlicz(config, &fact),
        Command::Wasserstein => wasserstein(config, &fact),
        Command::Verify => verify(config, &spec, &fact),
    }
}

fn factorize(config: &RunConfig, spec: &ScaleSpec, fact: &Factorization) -> Result<Report, CliError> {
    let grid = fact.grid();
    let psi = fact.psi_hat_values();
    let (_, theta) = fact.phi_check_table();
    let phi_of_psi = psi.iter().map(|&y| fact.phi_check(y)).collect::<Result<Vec<_>, _>>()?;
    match config.output_format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Scale(ScaleError::Csv(e));
            w.write_record(["r", "theta", "psi_hat", "phi_check"]).map_err(io)?;
            for k in 0..grid.len() {
                w.write_record([grid[k], theta[k], psi[k], phi_of_psi[k]].map(|v| v.to_string()))
                    .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Report::Csv(String::from_utf8(bytes).expect("csv is utf-8")))
        }
        OutputFormat::Json => {
            let invariants = fact.check_invariants()?;
            Ok(Report::Json(json!({
                "config": config,
                "scale": spec.to_string(),
                "concave_normalized": fact.is_concave_normalized(),
                "phi_check_inv_at_1": fact.phi_check_inv_at_1(),
                "invariants": invariants,
                "invariants_hold": invariants.holds(),
                "grid": grid,
                "theta": theta,
                "psi_hat": psi,
                "phi_check": phi_of_psi,
            })))
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn orlicz(config: &RunConfig, fact: &Factorization) -> Result<Report, CliError> {
    let f = SampleFunction::load(required(&config.f))?;
    let g = SampleFunction::load(required(&config.g))?;
    let space = WeightedSpace::load(required(&config.space))?;
    let result = gauge::orlicz_distance(&f, &g, fact, &space, config.tol)?;
    let concave = if fact.is_concave_normalized() {
        Some(gauge::orlicz_distance_concave(&f, &g, fact, &space)?)
    } else {
        None
    };
    Ok(Report::Json(json!({
        "config": config,
        "distance": result.distance,
        "modular_at_t": result.modular_at_t,
        "bisection_iterations": result.bisection_iterations,
        "bracket": result.bracket,
        "concave_closed_form": concave,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    pairs: Vec<ManifestPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestPair {
    mu: PathBuf,
    nu: PathBuf,
}

fn wasserstein_json(r: &transport::WassersteinResult) -> Value {
    json!({
        "distance": r.distance,
        "transport_modular_at_w": r.transport_modular_at_w,
        "lp_solves": r.lp_solves,
        "bracket": r.bracket,
        "optimal_plan": r.optimal_plan.rows(),
    })
}

fn wasserstein(config: &RunConfig, fact: &Factorization) -> Result<Report, CliError> {
    let space = FiniteMetricSpace::load(required(&config.metric), config.metric_check())?;
    if let Some(manifest_path) = &config.pairs {
        let manifest: Manifest = serde_json::from_str(&read_text(manifest_path)?)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let results = manifest
            .pairs
            .par_iter()
            .map(|p| -> Result<Value, CliError> {
                let mu = DiscreteMeasure::load(base.join(&p.mu))?;
                let nu = DiscreteMeasure::load(base.join(&p.nu))?;
                let r = transport::wasserstein_distance(&mu, &nu, &space, fact, config.tol)?;
                let mut v = wasserstein_json(&r);
                v["mu"] = json!(p.mu);
                v["nu"] = json!(p.nu);
                Ok(v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Report::Json(json!({ "config": config, "results": results })));
    }
    let mu = DiscreteMeasure::load(required(&config.mu))?;
    let nu = DiscreteMeasure::load(required(&config.nu))?;
    let r = transport::wasserstein_distance(&mu, &nu, &space, fact, config.tol)?;
    Ok(match config.output_format {
        OutputFormat::Csv => Report::Csv(r.optimal_plan.to_csv()),
        OutputFormat::Json => {
            let mut v = wasserstein_json(&r);
            v["config"] = json!(config);
            Report::Json(v)
        }
    })
}

fn verify(config: &RunConfig, spec: &ScaleSpec, fact: &Factorization) -> Result<Report, CliError> {
    let (min_phi, min_psi) = fact.as_scale_specs()?;
    let phi = config.phi.as_deref().map(parse_spec).transpose()?.unwrap_or(min_phi);
    let psi = config.psi.as_deref().map(parse_spec).transpose()?.unwrap_or(min_psi);
    // skip r = 0, where derivatives may be infinite
    let grid = &log_grid(config.grid_points, config.r_max)[1..];
    let residual = verify_factorization(spec, &phi, &psi, grid)?;
    let mut report = json!({
        "config": config,
        "factorization": residual,
        "factorization_holds": residual.sup_residual <= config.tol && residual.value_residual <= config.tol,
        "invariants": fact.check_invariants()?,
    });
    if let Some(candidate) = &config.psi {
        let gaps = minimality_gap(&parse_spec(candidate)?, fact, grid)?;
        let (k, worst) = gaps
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &g)| if g > acc.1 { (k, g) } else { acc });
        report["minimality"] = json!({
            "max_gap": worst,
            "argmax": grid[k],
            "points": gaps.len(),
            "minimal_is_more_concave": worst <= config.tol,
        });
    }
    Ok(Report::Json(report))
}

fn emit(config: &RunConfig, report: &Report) -> Result<(), CliError> {
    let text = report.render();
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // reader went away, e.g. `ccc factorize ... | head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
            .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Parses arguments, runs, writes the report, and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|config| {
        let report = run(&config)?;
        emit(&config, &report)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
