//! `placecrb` command-line front end: argument model, report rendering and
//! exit-code mapping. `main.rs` only parses arguments and sets up the thread pool.

use std::fmt::Write as _;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use placecrb::bounds::{bound_label, bound_ordering_report, generalized_bound, BoundInputs};
use placecrb::constraints::{
    active_constraints, group_gap_stats, is_uaa, max_gap_error_deg, modality_constraints,
    residuals, DEFAULT_TOLERANCE,
};
use placecrb::fim::assemble_fim_direct;
use placecrb::optimizer::{optimize, optimize_multistart, GradientMode, Termination};
use placecrb::output::write_trajectory_csv;
use placecrb::scenario_file::{load_scenario, GeometriesFile};
use placecrb::simulate::{mse_sweep, McConfig};
use placecrb::{Error, OptimizerConfig, Scenario, Trajectory};

pub const THREADS_ENV: &str = "PLACECRB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "placecrb", version, about = "CRB analysis and optimal sensor placement for hybrid TDOA/AOA/RSS/TOA localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher information, tr(CRB) and the gap to the analytic bound.
    Crb(CommonArgs),
    /// Analytic bounds O1..O7 for the scenario's noise and ranges.
    Bounds(BoundsArgs),
    /// Gradient descent on tr(CRB) over sensor azimuths.
    Optimize(OptimizeArgs),
    /// Optimal-geometry constraint residuals.
    Verify(CommonArgs),
    /// Monte Carlo MSE sweep over TDOA noise levels.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also list combinations outside the TDOA family.
    #[arg(long)]
    pub extensions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradientArg {
    Analytic,
    Fd,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step_size: f64,
    #[arg(long, value_enum, default_value_t = GradientArg::Analytic)]
    pub gradient: GradientArg,
    /// Independent starts; start 0 is the scenario geometry, the rest are random.
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub geometries: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0])]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{0}")]
    Singular(String),
    #[error("{0}")]
    Stall(String),
    #[error("{0}")]
    Excluded(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Singular(_) => 4,
            CliError::Stall(_) => 5,
            CliError::Excluded(_) => 6,
            CliError::Other(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ScenarioFile(m) => CliError::Parse(m),
            Error::Validation(m) => CliError::Validation(m),
            e @ (Error::TooFewSensors { .. }
            | Error::CoincidentSensor { .. }
            | Error::InvalidReference { .. }
            | Error::InvalidGeometry(_)
            | Error::InvalidConfig(_)
            | Error::EmptyCombo) => CliError::Validation(e.to_string()),
            e @ Error::SingularFim { .. } => CliError::Singular(e.to_string()),
            e @ Error::Stall { .. } => CliError::Stall(e.to_string()),
            e => CliError::Other(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Other(format!("{}: {e}", path.display()))
}

/// Completion marker written after every other output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: PathBuf,
    pub overrides: BTreeMap<String, String>,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    fn write(&self, path: &Path) -> Result<(), CliError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Other(e.to_string()))?;
        fs::write(path, text).map_err(|e| io_err(path, e))
    }
}

fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok(load_scenario(&text)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Sends a rendered report to `--out` (with manifest) or to stdout.
fn emit(
    report: String,
    args: &CommonArgs,
    command: &str,
    started: Instant,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match &args.out {
        Some(path) => {
            write_file(path, report.as_bytes())?;
            RunManifest {
                command: command.into(),
                scenario: args.scenario.clone(),
                overrides: BTreeMap::from([("tolerance".into(), args.tolerance.to_string())]),
                seed: args.seed,
                outputs: vec![path.clone()],
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            }
            .write(&manifest_path(path))?;
            writeln!(stdout, "wrote {}", path.display()).ok();
        }
        None => {
            stdout.write_all(report.as_bytes()).ok();
        }
    }
    Ok(())
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Crb(a) => cmd_crb(a, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::Optimize(a) => cmd_optimize(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    }
}

fn bound_for(s: &Scenario) -> Result<(String, f64), CliError> {
    let inputs = BoundInputs::of(s);
    let value = generalized_bound(&inputs)?;
    let label = match bound_label(s.combo) {
        Some(k) => format!("O{k}"),
        None => "extension".to_string(),
    };
    Ok((label, value))
}

pub fn cmd_crb(args: &CommonArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let s = read_scenario(&args.scenario)?;
    let f = assemble_fim_direct(&s);
    let eig = f.eigenvalues();
    let tr = f.tr_crb().map_err(|e| {
        CliError::Singular(format!(
            "{e}; eigenvalues {:.6e}, {:.6e} (degenerate geometry for {})",
            eig[0], eig[1], s.combo
        ))
    })?;
    let (label, bound) = bound_for(&s)?;
    let gap = tr - bound;

    let mut r = String::new();
    match args.format {
        Format::Text => {
            writeln!(r, "combo: {}  sensors: {}", s.combo, s.geometry.n()).ok();
            writeln!(r, "FIM:").ok();
            writeln!(r, "  phi11 = {:.9e}", f.phi11).ok();
            writeln!(r, "  phi12 = {:.9e}", f.phi12).ok();
            writeln!(r, "  phi22 = {:.9e}", f.phi22).ok();
            writeln!(r, "eigenvalues: {:.9e}, {:.9e}", eig[0], eig[1]).ok();
            writeln!(r, "tr(CRB) = {tr:.6} m^2").ok();
            writeln!(r, "optimal bound ({label}) = {bound:.6} m^2").ok();
            writeln!(r, "gap = {gap:.3e} m^2 (relative {:.3e})", gap / bound).ok();
        }
        Format::Csv => {
            writeln!(r, "quantity,value").ok();
            for (k, v) in [
                ("phi11", f.phi11),
                ("phi12", f.phi12),
                ("phi22", f.phi22),
                ("eig_min", eig[0]),
                ("eig_max", eig[1]),
                ("tr_crb_m2", tr),
                ("bound_m2", bound),
                ("gap_m2", gap),
            ] {
                writeln!(r, "{k},{v}").ok();
            }
            writeln!(r, "bound_label,{label}").ok();
        }
    }
    emit(r, args, "crb", started, stdout)
}

pub fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let s = read_scenario(&args.common.scenario)?;
    let rows = bound_ordering_report(&s.noise, &s.geometry, args.extensions);
    let mut r = String::new();
    match args.common.format {
        Format::Text => {
            writeln!(
                r,
                "{:<10} {:<18} {:>14} {:>14} {:>14} {:>12}",
                "bound", "combo", "H", "L", "sum 1/d^2", "tr_crb_m2"
            )
            .ok();
            for row in &rows {
                writeln!(
                    r,
                    "{:<10} {:<18} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.6}",
                    row.name(),
                    row.combo.to_string(),
                    row.inputs.h,
                    row.inputs.l,
                    row.inputs.inv_d2_sum,
                    row.bound
                )
                .ok();
            }
        }
        Format::Csv => {
            writeln!(r, "label,combo,h,l,inv_d2_sum,n,bound_m2").ok();
            for row in &rows {
                writeln!(
                    r,
                    "{},{},{},{},{},{},{}",
                    row.name(),
                    row.combo,
                    row.inputs.h,
                    row.inputs.l,
                    row.inputs.inv_d2_sum,
                    row.inputs.n,
                    row.bound
                )
                .ok();
            }
        }
    }
    emit(r, &args.common, "bounds", started, stdout)
}

pub fn cmd_verify(args: &CommonArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let s = read_scenario(&args.scenario)?;
    let set = active_constraints(s.combo);
    let report = residuals(&s.geometry, set, args.tolerance);
    let uaa = is_uaa(&s.geometry, 0.5);
    let mut r = String::new();
    match args.format {
        Format::Text => {
            writeln!(r, "combo: {}  active constraints: {set}", s.combo).ok();
            for m in s.combo.modalities() {
                writeln!(r, "  {m}: {}", modality_constraints(m)).ok();
            }
            writeln!(
                r,
                "{:<18} {:<5} {:>14} {:>14} {:>5}",
                "constraint", "group", "value", "scaled", "pass"
            )
            .ok();
            for row in &report.rows {
                writeln!(
                    r,
                    "{:<18} {:<5} {:>14.6e} {:>14.6e} {:>5}",
                    row.name,
                    row.group.to_string(),
                    row.value,
                    row.scaled,
                    if row.pass { "pass" } else { "FAIL" }
                )
                .ok();
            }
            writeln!(
                r,
                "residual inf-norm: {:.6e} (tolerance {:e}) -> {}",
                report.inf_norm,
                report.tolerance,
                if report.satisfied { "satisfied" } else { "not satisfied" }
            )
            .ok();
            writeln!(
                r,
                "UAA: {uaa} (max gap error {:.2} deg)",
                max_gap_error_deg(&s.geometry.alphas())
            )
            .ok();
        }
        Format::Csv => {
            writeln!(r, "constraint,group,value,scaled,pass").ok();
            for row in &report.rows {
                writeln!(r, "{},{},{},{},{}", row.name, row.group, row.value, row.scaled, row.pass)
                    .ok();
            }
        }
    }
    emit(r, args, "verify", started, stdout)
}

fn fmt_angles(deg: &[f64]) -> String {
    let parts: Vec<String> = deg.iter().map(|a| format!("{a:.2}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn run_path(out: &Path, k: usize, starts: usize) -> PathBuf {
    if starts <= 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}_run{k}{ext}"))
}

pub fn cmd_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let c = &args.common;
    let s = read_scenario(&c.scenario)?;
    let cfg = OptimizerConfig {
        max_steps: args.steps,
        step_size: args.step_size,
        gradient_mode: match args.gradient {
            GradientArg::Analytic => GradientMode::Analytic,
            GradientArg::Fd => GradientMode::FiniteDifference,
        },
        residual_tolerance: c.tolerance,
        ..Default::default()
    };
    let starts = args.starts.max(1);
    let runs: Vec<Trajectory> = if starts == 1 {
        vec![optimize(&s, &cfg, c.seed)?]
    } else {
        optimize_multistart(&s, &cfg, c.seed, starts)
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?
    };

    let mut outputs = Vec::new();
    if let Some(out) = &c.out {
        for (k, t) in runs.iter().enumerate() {
            let path = run_path(out, k, starts);
            let mut buf = Vec::new();
            write_trajectory_csv(t, &mut buf)?;
            write_file(&path, &buf)?;
            outputs.push(path);
        }
    }

    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.final_tr_crb.total_cmp(&b.1.final_tr_crb))
        .expect("at least one run");
    let (best_idx, t) = best;
    let (label, bound) = bound_for(&s)?;

    let mut r = String::new();
    if starts > 1 {
        writeln!(r, "best of {starts} starts: run {best_idx}").ok();
    }
    writeln!(r, "initial angles (deg): {}", fmt_angles(&s.geometry.alphas_deg())).ok();
    writeln!(r, "final angles (deg):   {}", fmt_angles(&t.final_geometry.alphas_deg())).ok();
    writeln!(r, "final tr(CRB) = {:.6} m^2", t.final_tr_crb).ok();
    writeln!(r, "optimal bound ({label}) = {bound:.6} m^2").ok();
    writeln!(
        r,
        "iterations: {}  termination: {:?}  gradient norm: {:.3e}",
        t.iterations, t.termination, t.final_gradient_norm
    )
    .ok();
    for row in &t.final_report.rows {
        writeln!(
            r,
            "  {:<18} {:>14.6e} {:>14.6e} {}",
            row.name,
            row.value,
            row.scaled,
            if row.pass { "pass" } else { "FAIL" }
        )
        .ok();
    }
    writeln!(r, "residual inf-norm: {:.6e}", t.final_report.inf_norm).ok();
    let uaa = is_uaa(&t.final_geometry, 0.5);
    writeln!(r, "UAA: {uaa}").ok();
    let groups = group_gap_stats(&t.final_geometry);
    if groups.len() > 1 {
        for g in groups.iter().filter(|g| g.members.len() >= 3) {
            writeln!(
                r,
                "  group d = {} m: max gap error {:.2} deg",
                g.range, g.max_gap_error_deg
            )
            .ok();
        }
    }
    stdout.write_all(r.as_bytes()).ok();

    if let Some(out) = &c.out {
        for p in &outputs {
            writeln!(stdout, "wrote {}", p.display()).ok();
        }
        RunManifest {
            command: "optimize".into(),
            scenario: c.scenario.clone(),
            overrides: BTreeMap::from([
                ("steps".into(), args.steps.to_string()),
                ("step_size".into(), args.step_size.to_string()),
                ("starts".into(), starts.to_string()),
                ("gradient".into(), format!("{:?}", args.gradient)),
            ]),
            seed: c.seed,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
        .write(&manifest_path(out))?;
    }

    if runs.iter().any(|t| t.termination == Termination::Stalled) {
        return Err(CliError::Stall(
            "optimizer stalled on singular FIM; last good geometry written".into(),
        ));
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let c = &args.common;
    let s = read_scenario(&c.scenario)?;
    let text = fs::read_to_string(&args.geometries)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.geometries.display())))?;
    let geometries = GeometriesFile::parse(&text)?
        .to_geometries(s.geometry.source(), s.geometry.reference_index())?;
    let cfg = McConfig {
        trials: args.trials,
        seed: c.seed,
        sigma_sweep: args.sigmas.clone(),
    };
    let table = mse_sweep(&geometries, &s.noise, s.combo, &cfg)?;

    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    match &c.out {
        Some(out) => {
            write_file(out, &buf)?;
            writeln!(stdout, "wrote {}", out.display()).ok();
        }
        None => {
            stdout.write_all(&buf).ok();
        }
    }
    for (sigma, id) in table.winners() {
        writeln!(stdout, "sigma = {sigma} m: smallest MSE -> {id}").ok();
    }
    if let Some(out) = &c.out {
        RunManifest {
            command: "sweep".into(),
            scenario: c.scenario.clone(),
            overrides: BTreeMap::from([
                ("geometries".into(), args.geometries.display().to_string()),
                ("sigmas".into(), format!("{:?}", args.sigmas)),
                ("trials".into(), args.trials.to_string()),
            ]),
            seed: c.seed,
            outputs: vec![out.clone()],
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
        .write(&manifest_path(out))?;
    }

    let excluded = table.max_excluded_fraction();
    if excluded > 1e-3 {
        return Err(CliError::Excluded(format!(
            "excluded trials {:.3}% exceed 0.1%",
            excluded * 100.0
        )));
    }
    Ok(())
}

/// Reads `PLACECRB_THREADS` (0 or unset = rayon default).
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}
