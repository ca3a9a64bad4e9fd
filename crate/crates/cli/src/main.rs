//! `vphmpc`: run navigation episodes, batch sweeps and plots.
//!
//! Exit status: 0 when every episode reaches its goal, 1 on a navigation
//! failure, 2 on usage, config or I/O errors.

mod config;
mod plot;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vphmpc::simloop::{
    read_csv, read_trajectory_csv, run_episode_traced, write_csv, write_trajectory_csv, ControllerMode,
    EpisodeConfig, HistogramRow, Metrics, Outcome,
};
use vphmpc::world::{load_scenario, Scenario, WorldError};

#[derive(Parser, Debug)]
#[command(name = "vphmpc", version, about = "VPH+ obstacle avoidance with MPC steering, in a 2D simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode and write its logs
    Run(RunArgs),
    /// Run every scenario in every mode
    Batch(BatchArgs),
    /// Render a log as SVG
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON file mirroring the episode config; missing fields keep defaults
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one config field, e.g. `mpc.N_p=20` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in scenario name or path to a scenario JSON file
    #[arg(long)]
    scenario: String,
    /// vph_only | vph_mpc (default from config)
    #[arg(long)]
    mode: Option<ControllerMode>,
    /// Output directory, created if absent
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Also write per-cycle histogram and solver CSVs
    #[arg(long)]
    debug: bool,
    /// Overwrite existing output files
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// Scenarios (repeatable or comma separated)
    #[arg(long = "scenario", required = true, value_delimiter = ',')]
    scenarios: Vec<String>,
    /// Modes (repeatable or comma separated); both when omitted
    #[arg(long = "mode", value_delimiter = ',')]
    modes: Vec<ControllerMode>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    debug: bool,
    #[arg(long)]
    force: bool,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Trajectory,
    Control,
    Histogram,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// trajectory.csv for trajectory/control, histogram.csv for histogram
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
    /// Cycle shown by the histogram plot
    #[arg(long, default_value_t = 0)]
    cycle: usize,
    /// Scenario whose obstacles are drawn under the trajectory; defaults to
    /// the one recorded in a sibling summary.json
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    force: bool,
}

const TRAJECTORY: &str = "trajectory.csv";
const SUMMARY: &str = "summary.json";
const HISTOGRAM: &str = "histogram.csv";
const SOLVER: &str = "mpc.csv";

#[derive(Debug, Serialize, Deserialize)]
struct Summary {
    scenario: String,
    source: String,
    mode: ControllerMode,
    outcome: Outcome,
    metrics: Metrics,
    config: EpisodeConfig,
    world: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BatchRow {
    scenario: String,
    mode: ControllerMode,
    outcome: String,
    steps: Option<usize>,
    path_length: Option<f64>,
    min_clearance: Option<f64>,
    max_steer_rate_deg: Option<f64>,
    error: Option<String>,
}

fn load_world(source: &str) -> Result<Scenario> {
    load_scenario(source).map_err(|e| match e {
        WorldError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            anyhow!("{path}: file not found (and not a built-in scenario)")
        }
        other => other.into(),
    })
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    if let Some(p) = paths.iter().find(|p| p.exists()) {
        bail!("{} already exists; pass --force to overwrite", p.display());
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("{}: cannot create", path.display()))?,
    ))
}

/// Runs one episode into `out` and returns its summary.
fn run_into(source: &str, world: &Scenario, cfg: &EpisodeConfig, out: &Path, debug: bool, force: bool) -> Result<Summary> {
    let mut targets = vec![out.join(TRAJECTORY), out.join(SUMMARY)];
    if debug {
        targets.extend([out.join(HISTOGRAM), out.join(SOLVER)]);
    }
    refuse_overwrite(&targets, force)?;
    std::fs::create_dir_all(out).with_context(|| format!("{}: cannot create directory", out.display()))?;

    let (log, trace) = run_episode_traced(world, cfg)?;
    write_trajectory_csv(create(&targets[0])?, &log.records).with_context(|| targets[0].display().to_string())?;
    if debug {
        write_csv(create(&targets[2])?, &trace.histograms).with_context(|| targets[2].display().to_string())?;
        write_csv(create(&targets[3])?, &trace.mpc).with_context(|| targets[3].display().to_string())?;
    }
    let summary = Summary {
        scenario: world.name.clone(),
        source: source.to_string(),
        mode: cfg.controller_mode,
        outcome: log.outcome,
        metrics: log.metrics,
        config: cfg.clone(),
        world: world.clone(),
    };
    serde_json::to_writer_pretty(create(&targets[1])?, &summary)?;
    Ok(summary)
}

fn describe(s: &Summary) -> String {
    let m = &s.metrics;
    let clearance = if m.min_clearance == f64::MAX {
        "inf".to_string()
    } else {
        format!("{:.3} m", m.min_clearance)
    };
    format!(
        "{} [{}]: {:?} after {} steps, path {:.2} m, min clearance {clearance}, max steering rate {:.1} deg/s",
        s.scenario,
        s.mode.as_str(),
        s.outcome,
        m.steps,
        m.path_length,
        m.max_steer_rate_deg
    )
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let cfg = config::effective_config(args.config.params.as_deref(), args.mode, &args.config.sets)?;
    let world = load_world(&args.scenario)?;
    let summary = run_into(&args.scenario, &world, &cfg, &args.out, args.debug, args.force)?;
    if summary.outcome == Outcome::GoalReached {
        println!("{}", describe(&summary));
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("navigation failed: {}", describe(&summary));
        Ok(ExitCode::from(1))
    }
}

fn run_dir_name(source: &str, mode: ControllerMode) -> String {
    let stem = Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string());
    format!("{stem}_{}", mode.as_str())
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode> {
    let modes = if args.modes.is_empty() {
        vec![ControllerMode::VphOnly, ControllerMode::VphMpc]
    } else {
        args.modes.clone()
    };
    let table = args.out.join("metrics.csv");
    refuse_overwrite(std::slice::from_ref(&table), args.force)?;
    let base = config::effective_config(args.config.params.as_deref(), None, &args.config.sets)?;

    let jobs: Vec<(String, ControllerMode)> = args
        .scenarios
        .iter()
        .flat_map(|s| modes.iter().map(move |&m| (s.clone(), m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()?;
    let results: Vec<(String, ControllerMode, Result<Summary>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(source, mode)| {
                let cfg = EpisodeConfig {
                    controller_mode: *mode,
                    ..base.clone()
                };
                let out = args.out.join(run_dir_name(source, *mode));
                let res = load_world(source).and_then(|w| run_into(source, &w, &cfg, &out, args.debug, args.force));
                (source.clone(), *mode, res)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let (mut failures, mut errors) = (0, 0);
    for (source, mode, res) in results {
        match res {
            Ok(s) => {
                if s.outcome == Outcome::GoalReached {
                    println!("{}", describe(&s));
                } else {
                    failures += 1;
                    eprintln!("navigation failed: {}", describe(&s));
                }
                rows.push(BatchRow {
                    scenario: s.scenario,
                    mode,
                    outcome: format!("{:?}", s.outcome),
                    steps: Some(s.metrics.steps),
                    path_length: Some(s.metrics.path_length),
                    min_clearance: Some(s.metrics.min_clearance),
                    max_steer_rate_deg: Some(s.metrics.max_steer_rate_deg),
                    error: None,
                });
            }
            Err(e) => {
                errors += 1;
                eprintln!("error: {source} [{}]: {e:#}", mode.as_str());
                rows.push(BatchRow {
                    scenario: source,
                    mode,
                    outcome: "Error".into(),
                    steps: None,
                    path_length: None,
                    min_clearance: None,
                    max_steer_rate_deg: None,
                    error: Some(format!("{e:#}")),
                });
            }
        }
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("{}: cannot create directory", args.out.display()))?;
    write_csv(create(&table)?, &rows).with_context(|| table.display().to_string())?;
    println!("{} runs, {failures} navigation failures, {errors} errors; table in {}", rows.len(), table.display());
    Ok(if errors > 0 {
        ExitCode::from(2)
    } else if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn sibling_world(log: &Path) -> Option<Scenario> {
    let path = log.with_file_name(SUMMARY);
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str::<Summary>(&text).ok().map(|s| s.world)
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode> {
    refuse_overwrite(std::slice::from_ref(&args.out), args.force)?;
    let open = || File::open(&args.log).with_context(|| format!("{}: cannot open log", args.log.display()));
    let name = args.log.display().to_string();
    let svg = match args.kind {
        PlotKind::Trajectory | PlotKind::Control => {
            let records = read_trajectory_csv(open()?).with_context(|| format!("{name}: malformed trajectory log"))?;
            if records.is_empty() {
                bail!("{name}: log has no records");
            }
            if args.kind == PlotKind::Control {
                plot::control_svg(&records, &format!("Steering: {name}"))
            } else {
                let world = match &args.scenario {
                    Some(s) => Some(load_world(s)?),
                    None => sibling_world(&args.log),
                };
                plot::trajectory_svg(&records, world.as_ref(), &format!("Trajectory: {name}"))
            }
        }
        PlotKind::Histogram => {
            let rows: Vec<HistogramRow> = read_csv(open()?).with_context(|| format!("{name}: malformed histogram log"))?;
            let cycle: Vec<HistogramRow> = rows.into_iter().filter(|r| r.cycle == args.cycle).collect();
            if cycle.is_empty() {
                bail!("{name}: no rows for cycle {}", args.cycle);
            }
            plot::histogram_svg(&cycle, &format!("Histogram, cycle {}: {name}", args.cycle))
        }
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    }
    std::fs::write(&args.out, svg).with_context(|| format!("{}: cannot write", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
