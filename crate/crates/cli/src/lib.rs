//! The `dualwave` command line: `run`, `verify` and `sweep`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 mid-run blow-up (partial output is still written).

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use dualwave_core::diagnostics::overlap_phase;
use dualwave_core::output::{fmt_f64, snapshot_csv, summary_csv};
use dualwave_core::runner::{execute, Execution};
use dualwave_core::scenarios::{expand, PotentialSpec, Prepared, ScenarioKind, ScenarioSpec};
use dualwave_core::verify::{criterion_names, run_criterion, Profile};
use dualwave_core::wavesolver::NonlinearTerm;
use dualwave_core::Grid1D;
use rayon::prelude::*;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    BlowUp(String),
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::BlowUp(_) => EXIT_BLOW_UP,
            CliError::VerifyFailed(_) => EXIT_VERIFY_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::BlowUp(m) => write!(f, "blow-up: {m}"),
            CliError::VerifyFailed(names) => write!(f, "failed criteria: {}", names.join(", ")),
        }
    }
}

impl From<dualwave_core::Error> for CliError {
    fn from(e: dualwave_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dualwave", version, about = "Dual-sector dissipative mechanics simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Source {
    /// Builtin scenario name.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write `<name>_snapshots.csv` and `<name>_summary.csv`.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Verify {
        #[arg(long, value_enum, default_value = "default")]
        profile: ProfileArg,
        /// Criterion names; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Run a wave scenario once per parameter value; writes `<name>_sweep_<param>.csv`.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; write `--values=-0.1,0.2` when the list starts negative.
        #[arg(long, value_delimiter = ',', num_args = 0..=1, allow_negative_numbers = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Default,
    Strict,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Default => Profile::Default,
            ProfileArg::Strict => Profile::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "m1")]
    M1,
    #[value(name = "lambda_Vg1")]
    LambdaVg1,
    #[value(name = "zeta")]
    Zeta,
    #[value(name = "dt")]
    Dt,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M1 => "m1",
            SweepParam::LambdaVg1 => "lambda_Vg1",
            SweepParam::Zeta => "zeta",
            SweepParam::Dt => "dt",
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command, out: &mut impl std::io::Write) -> Result<(), CliError> {
    match command {
        Command::Run { source, out: dir } => {
            let cfg = load(&source)?;
            let dir = cfg.out_dir(dir.as_deref());
            let paths = cmd_run(&cfg, &dir)?;
            for p in paths {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            Ok(())
        }
        Command::Verify { profile, only } => cmd_verify(profile.into(), &only, out),
        Command::Sweep {
            source,
            param,
            values,
            out: dir,
        } => {
            let cfg = load(&source)?;
            let dir = cfg.out_dir(dir.as_deref());
            let values = parse_values(&values)?;
            let path = cmd_sweep(&cfg, param, &values, &dir)?;
            let _ = writeln!(out, "wrote {}", path.display());
            Ok(())
        }
    }
}

fn load(source: &Source) -> Result<RunConfig, CliError> {
    match (&source.scenario, &source.config) {
        (Some(name), None) => RunConfig::from_builtin(name),
        (None, Some(path)) => RunConfig::load(path),
        _ => Err(CliError::Config("one of --scenario or --config is required".into())),
    }
}

pub fn parse_values(raw: &[String]) -> Result<Vec<f64>, CliError> {
    let values = raw
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("values: `{s}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config("values: the value list is empty".into()));
    }
    Ok(values)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Config(format!("output: cannot write `{}`: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output: cannot create `{}`: {e}", dir.display())))
}

/// Runs the configured scenario and writes its two CSV files.
pub fn cmd_run(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let prepared = expand(&cfg.scenario, cfg.grid)?;
    create_dir(dir)?;
    if cfg.output.verbosity > 0 {
        eprintln!("running `{}` on {} points", cfg.scenario.name, cfg.grid.n_points());
    }
    let exec = execute(&cfg.scenario.name, cfg.grid, &prepared)?;
    let snapshots = dir.join(format!("{}_snapshots.csv", exec.name));
    let summary = dir.join(format!("{}_summary.csv", exec.name));
    write_file(&snapshots, &snapshot_csv(&exec))?;
    write_file(&summary, &summary_csv(&exec))?;
    match &exec.failure {
        None => Ok(vec![snapshots, summary]),
        Some(f) => Err(CliError::BlowUp(format!(
            "`{}` stopped at step {} (t = {}): {}; partial output in {}",
            exec.name,
            f.step,
            f.t,
            f.reason,
            dir.display()
        ))),
    }
}

/// Runs the named criteria (all when `only` is empty) and prints a table.
pub fn cmd_verify(profile: Profile, only: &[String], out: &mut impl std::io::Write) -> Result<(), CliError> {
    let names: Vec<String> = if only.is_empty() {
        criterion_names().into_iter().map(String::from).collect()
    } else {
        only.to_vec()
    };
    let known = criterion_names();
    if let Some(bad) = names.iter().find(|n| !known.contains(&n.as_str())) {
        return Err(CliError::Config(format!(
            "only: unknown criterion `{bad}`; available: {}",
            known.join(", ")
        )));
    }
    let _ = writeln!(out, "{:<24} {:<60} {:>12} {:>18}  result", "criterion", "check", "measured", "bound");
    let mut failed = Vec::new();
    for name in &names {
        let r = run_criterion(name, profile)?;
        if let Some(e) = &r.error {
            let _ = writeln!(out, "{:<24} {:<60} {:>12} {:>18}  FAIL", r.name, e, "-", "-");
        }
        for c in &r.checks {
            let verdict = if c.passed() { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{:<24} {:<60} {:>12.3e} {:>18}  {verdict}",
                r.name,
                c.label,
                c.measured,
                c.bound.to_string()
            );
        }
        if !r.passed() {
            failed.push(r.name.to_string());
        }
    }
    let _ = writeln!(out, "{}/{} criteria passed", names.len() - failed.len(), names.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}

/// `spec` with `param` set to `value`. `dt` keeps the scenario's end time.
pub fn apply_sweep_value(spec: &ScenarioSpec, param: SweepParam, value: f64) -> Result<ScenarioSpec, CliError> {
    let mut s = spec.clone();
    let ScenarioKind::Wave(w) = &mut s.kind else {
        return Err(CliError::Config(format!(
            "param: sweeps need a wave scenario, `{}` is not one",
            spec.name
        )));
    };
    match param {
        SweepParam::M1 => s.params = s.params.with_mass(1, value)?,
        SweepParam::LambdaVg1 => w.vg1 = PotentialSpec::Constant { value: -value },
        SweepParam::Zeta => w.zeta_override = Some(value),
        SweepParam::Dt => {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::Config(format!("dt: must be finite and positive, got {value}")));
            }
            let t_end = s.integration.dt * s.integration.n_steps as f64;
            s.integration.dt = value;
            s.integration.n_steps = (t_end / value).round() as usize;
        }
    }
    Ok(s)
}

pub const SWEEP_HEADER: &str = "param,value,t,norm,energy,drift_rate,continuity_residual,phase,nonlinear_phase";

/// `arg ⟨ψ(0)|ψ(t)⟩` per snapshot, unwrapped in time.
fn unwrapped_phases(exec: &Execution) -> Result<Vec<f64>, CliError> {
    let run = exec.expect_wave()?;
    let psi0 = &run.snapshots[0].psi;
    let mut out: Vec<f64> = Vec::with_capacity(run.snapshots.len());
    for s in &run.snapshots {
        let raw = overlap_phase(psi0, &s.psi)?;
        let v = match out.last() {
            Some(&prev) => {
                let d = raw - prev;
                prev + (d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round())
            }
            None => raw,
        };
        out.push(v);
    }
    Ok(out)
}

struct SweepPoint {
    rows: String,
    failure: Option<String>,
}

fn sweep_point(spec: &ScenarioSpec, grid: Grid1D, param: SweepParam, value: f64) -> Result<SweepPoint, CliError> {
    let spec = apply_sweep_value(spec, param, value)?;
    let prepared = expand(&spec, grid)?;
    let exec = execute(&spec.name, grid, &prepared)?;
    let phases = unwrapped_phases(&exec)?;
    // the nonlinear contribution: the same run with the residual-mass term removed
    let linear = match &prepared {
        Prepared::Wave(sc) if sc.nonlinear_active() => {
            let off = Prepared::Wave(sc.clone().with_nonlinear(NonlinearTerm::Off));
            Some(unwrapped_phases(&execute(&spec.name, grid, &off)?)?)
        }
        _ => None,
    };
    let run = exec.expect_wave()?;
    let mut rows = String::new();
    for (i, r) in run.reports.iter().enumerate() {
        let nl = linear.as_ref().and_then(|l| l.get(i)).map_or(0.0, |l| phases[i] - l);
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{},{},{}",
            param.name(),
            fmt_f64(value),
            fmt_f64(r.t),
            fmt_f64(r.norm),
            fmt_f64(r.energy),
            fmt_f64(r.norm_drift_rate),
            fmt_f64(r.continuity_residual_l2),
            fmt_f64(phases[i]),
            fmt_f64(nl)
        );
    }
    let failure = exec
        .failure
        .map(|f| format!("# blow-up at {}={} step {} (t = {}): {}", param.name(), fmt_f64(value), f.step, fmt_f64(f.t), f.reason));
    Ok(SweepPoint { rows, failure })
}

/// Sweep parallelism cap from `DUALWAVE_THREADS`; 0 means rayon's default.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("DUALWAVE_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("DUALWAVE_THREADS: `{v}` is not a thread count"))),
    }
}

/// Runs one wave scenario per value (in parallel) and writes a combined
/// CSV whose rows are ordered by value.
pub fn cmd_sweep(cfg: &RunConfig, param: SweepParam, values: &[f64], dir: &Path) -> Result<PathBuf, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("values: the value list is empty".into()));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    for &v in &values {
        expand(&apply_sweep_value(&cfg.scenario, param, v)?, cfg.grid)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap()?)
        .build()
        .map_err(|e| CliError::Config(format!("DUALWAVE_THREADS: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| sweep_point(&cfg.scenario, cfg.grid, param, v))
            .collect::<Result<_, _>>()
    })?;
    create_dir(dir)?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for p in &points {
        csv.push_str(&p.rows);
    }
    let failures: Vec<&str> = points.iter().filter_map(|p| p.failure.as_deref()).collect();
    for f in &failures {
        csv.push_str(f);
        csv.push('\n');
    }
    let path = dir.join(format!("{}_sweep_{}.csv", cfg.scenario.name, param.name()));
    write_file(&path, &csv)?;
    if failures.is_empty() {
        Ok(path)
    } else {
        Err(CliError::BlowUp(format!(
            "{} of {} sweep runs blew up; partial output in {}",
            failures.len(),
            values.len(),
            path.display()
        )))
    }
}
