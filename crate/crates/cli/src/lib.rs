//! Command-line driver: config ingestion, subcommands and artifact export.

pub mod svg;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coverage_core::search::run_search;
use coverage_core::sim::{run_scenario, verify_invariants, Scenario, ScenarioConfig, TrajectoryLog};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_LOG: &str = "trajectory.json";
pub const CONFIG_ECHO: &str = "config.json";
pub const REPORT: &str = "report.txt";
pub const EPOCHS_CSV: &str = "epochs.csv";
pub const FINAL: &str = "final.json";

#[derive(Debug, Parser)]
#[command(name = "coverage", version, about = "Load-balanced coverage control on annular regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write its trajectory, snapshots and config echo.
    Run(RunArgs),
    /// Run the circular search over anchored bar phases.
    Search(RunArgs),
    /// Check the dynamics' invariants on a stored log or a fresh run.
    Verify(VerifyArgs),
    /// Re-render artifacts from a stored log.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Seed for randomly drawn initial conditions.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "input")]
pub struct VerifyInput {
    /// Scenario to run, then verify.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stored trajectory log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: VerifyInput,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    SvgSnapshots,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Snapshot times; defaults to the ones in the log's config.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub times: Option<Vec<f64>>,
}

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

/// Files written by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub trajectory_csv: Option<PathBuf>,
    pub trajectory_log: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub report: Option<PathBuf>,
    pub config_echo: Option<PathBuf>,
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| EXIT_OK),
        Command::Search(a) => cmd_search(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Export(a) => cmd_export(a).map(|_| EXIT_OK),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::runtime)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(Failure::runtime)
}

/// Reads and validates a config, applying command-line overrides.
pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::input)?;
    let mut config = ScenarioConfig::from_json(&text).map_err(Failure::input)?;
    if let Some(seed) = overrides.seed {
        config.agents.seed = seed;
    }
    if let Some(dt) = overrides.dt {
        config.integrator.dt = dt;
    }
    Scenario::from_config(config).map_err(Failure::input)
}

fn read_log(path: &Path) -> Result<TrajectoryLog, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading log {}", path.display()))
        .map_err(Failure::input)?;
    TrajectoryLog::from_json(&text)
        .with_context(|| format!("malformed log {}", path.display()))
        .map_err(Failure::input)
}

fn check_snapshot_times(times: &[f64], t_max: f64) -> Result<(), Failure> {
    for &t in times {
        if !(t.is_finite() && t >= 0.0 && t <= t_max + 1e-9) {
            return Err(Failure::input(anyhow!(
                "snapshot time out of range: {t} (log covers [0, {t_max}])"
            )));
        }
    }
    Ok(())
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t}.svg")
}

/// Renders one SVG per requested time from the last record at or before it.
pub fn write_snapshots(log: &TrajectoryLog, scenario: &Scenario, times: &[f64], out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let t_max = log.last().map_or(0.0, |r| r.t);
    check_snapshot_times(times, t_max)?;
    let mut paths = Vec::new();
    for &t in times {
        let record = log
            .at(t)
            .ok_or_else(|| Failure::input(anyhow!("snapshot time out of range: {t}")))?;
        let path = out.join(snapshot_name(t));
        write(&path, &svg::snapshot(scenario.domain().region(), record))?;
        paths.push(path);
    }
    Ok(paths)
}

fn write_log_artifacts(log: &TrajectoryLog, out: &Path, artifacts: &mut RunArtifacts) -> Result<(), Failure> {
    let csv = out.join(TRAJECTORY_CSV);
    write(&csv, &table::trajectory_csv(log))?;
    let json = out.join(TRAJECTORY_LOG);
    write(&json, &log.to_json())?;
    artifacts.trajectory_csv = Some(csv);
    artifacts.trajectory_log = Some(json);
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<RunArtifacts, Failure> {
    let scenario = load_scenario(&args.config, &args.overrides)?;
    let times = scenario.config().output.snapshot_times.clone();
    check_snapshot_times(&times, scenario.integrator().t_end)?;
    prepare_out(&args.out)?;
    let mut artifacts = RunArtifacts {
        out_dir: args.out.clone(),
        ..Default::default()
    };
    let echo = args.out.join(CONFIG_ECHO);
    write(&echo, &scenario.config().to_json())?;
    artifacts.config_echo = Some(echo);

    let log = match run_scenario(&scenario) {
        Ok(log) => log,
        Err(failure) => {
            write_log_artifacts(&failure.log, &args.out, &mut artifacts)?;
            return Err(Failure::runtime(anyhow!("integration failed: {failure}")));
        }
    };
    write_log_artifacts(&log, &args.out, &mut artifacts)?;
    artifacts.snapshots = write_snapshots(&log, &scenario, &times, &args.out)?;
    Ok(artifacts)
}

pub fn cmd_search(args: &RunArgs) -> CmdResult {
    let scenario = load_scenario(&args.config, &args.overrides)?;
    let config = *scenario
        .search()
        .ok_or_else(|| Failure::input(anyhow!("invalid configuration field `search`: section required")))?;
    prepare_out(&args.out)?;
    write(&args.out.join(CONFIG_ECHO), &scenario.config().to_json())?;
    let outcome = match run_search(&scenario, &config) {
        Ok(o) => o,
        Err(failure) => {
            write(&args.out.join(EPOCHS_CSV), &table::epochs_csv(&failure.log.epochs))?;
            return Err(Failure::runtime(anyhow!("search failed: {failure}")));
        }
    };
    write(&args.out.join(EPOCHS_CSV), &table::epochs_csv(&outcome.log.epochs))?;
    write(&args.out.join(TRAJECTORY_LOG), &outcome.log.to_json())?;
    let finalized = serde_json::to_string_pretty(&outcome.finalized).map_err(Failure::runtime)?;
    write(&args.out.join(FINAL), &finalized)?;
    println!(
        "K* = {}, selected k* = {}, J = {:.12e} (recomputed {:.12e})",
        config.k_star, outcome.finalized.best_k, outcome.finalized.j_stored, outcome.finalized.j_recomputed
    );
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let (log, scenario) = match (&args.input.config, &args.input.log) {
        (Some(config), _) => {
            let scenario = load_scenario(config, &args.overrides)?;
            let log = match run_scenario(&scenario) {
                Ok(log) => log,
                // verify what was integrated; the report flags the failure
                Err(failure) => failure.log,
            };
            (log, scenario)
        }
        (None, Some(path)) => {
            let log = read_log(path)?;
            let scenario = Scenario::from_config(log.config.clone())
                .context("log carries an invalid config")
                .map_err(Failure::input)?;
            (log, scenario)
        }
        (None, None) => return Err(Failure::input(anyhow!("either --config or --log is required"))),
    };
    prepare_out(&args.out)?;
    let report = verify_invariants(&log, &scenario);
    write(&args.out.join(REPORT), &report.to_string())?;
    print!("{report}");
    if report.all_pass() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VERIFY)
    }
}

pub fn cmd_export(args: &ExportArgs) -> Result<RunArtifacts, Failure> {
    let log = read_log(&args.log)?;
    let mut artifacts = RunArtifacts {
        out_dir: args.out.clone(),
        ..Default::default()
    };
    match args.format {
        ExportFormat::Csv => {
            prepare_out(&args.out)?;
            let path = args.out.join(TRAJECTORY_CSV);
            write(&path, &table::trajectory_csv(&log))?;
            artifacts.trajectory_csv = Some(path);
        }
        ExportFormat::SvgSnapshots => {
            let times = args
                .times
                .clone()
                .unwrap_or_else(|| log.config.output.snapshot_times.clone());
            check_snapshot_times(&times, log.last().map_or(0.0, |r| r.t))?;
            let scenario = Scenario::from_config(log.config.clone())
                .context("log carries an invalid config")
                .map_err(Failure::input)?;
            prepare_out(&args.out)?;
            artifacts.snapshots = write_snapshots(&log, &scenario, &times, &args.out)?;
        }
    }
    Ok(artifacts)
}
