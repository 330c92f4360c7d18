mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use syncnet::models::{preset_by_name, PRESET_NAMES};
use syncnet::scenario::{parse_scenario, OutputFormat, Scenario};
use syncnet::sim::{integrate, sync_metrics, Method, DEFAULT_SETTLE_EPS};
use syncnet::verify::{nyquist_data, verify_network, VerifyOptions};
use syncnet::Error;

/// Environment variable that overrides every scenario's output directory.
const OUT_DIR_ENV: &str = "SYNCNET_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "syncnet", version, about = "Simulate and verify adaptive leader-follower networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every synchronization hypothesis; writes `report` and `nyquist.csv`.
    Verify {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Seed for the sampled monotonicity check and LMI restarts.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the closed loop; writes `trace.csv` and `metrics`.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// rk4 | euler
        #[arg(long)]
        method: Option<Method>,
        /// Record every N-th step.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a bundled scenario to OUT, or to stdout.
    Preset { name: String, out: Option<PathBuf> },
}

/// Ordered by precedence when a batch mixes results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Pass,
    HypothesisFailed,
    Diverged,
    Error,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Error => 1,
            Self::HypothesisFailed => 2,
            Self::Diverged => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Verify { scenarios, out_dir, seed } => {
            batch(&scenarios, out_dir.as_deref(), |sc, dir| cmd_verify(sc, dir, seed))
        }
        Command::Simulate { scenarios, t_end, dt, method, stride, out_dir } => {
            batch(&scenarios, out_dir.as_deref(), |sc, dir| {
                let cfg = sc.sim_mut();
                cfg.t_end = t_end.unwrap_or(cfg.t_end);
                cfg.dt = dt.unwrap_or(cfg.dt);
                cfg.method = method.unwrap_or(cfg.method);
                cfg.record_stride = stride.unwrap_or(cfg.record_stride);
                cmd_simulate(sc, dir)
            })
        }
        Command::Preset { name, out } => cmd_preset(&name, out.as_deref()).unwrap_or_else(|e| {
            eprintln!("error: {e:#}");
            Outcome::Error
        }),
    };
    ExitCode::from(outcome.code())
}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Flag, then environment, then the scenario's own `outputs.directory`.
fn base_dir(flag: Option<&Path>, scenario: &Scenario) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| scenario.outputs.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Runs `job` on every scenario, one thread each. With more than one
/// scenario each run writes into a subdirectory named after the file stem.
fn batch<F>(paths: &[PathBuf], flag: Option<&Path>, job: F) -> Outcome
where
    F: Fn(&mut Scenario, &Path) -> anyhow::Result<Outcome> + Sync,
{
    let multi = paths.len() > 1;
    let run = |path: &PathBuf| -> Outcome {
        let result = load(path).and_then(|mut sc| {
            let mut dir = base_dir(flag, &sc);
            if multi {
                let stem = path.file_stem().ok_or_else(|| anyhow!("{} has no file name", path.display()))?;
                dir.push(stem);
            }
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            job(&mut sc, &dir)
        });
        result.unwrap_or_else(|e| {
            eprintln!("error: {}: {e:#}", path.display());
            Outcome::Error
        })
    };
    if !multi {
        return run(&paths[0]);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = paths.iter().map(|p| s.spawn(|| run(p))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or(Outcome::Error)).max().unwrap_or(Outcome::Pass)
    })
}

fn wants(sc: &Scenario, f: OutputFormat) -> bool {
    sc.outputs.formats.contains(&f)
}

fn cmd_verify(sc: &mut Scenario, dir: &Path, seed: Option<u64>) -> anyhow::Result<Outcome> {
    let seed = seed.unwrap_or(sc.sim().seed);
    let mut opts = VerifyOptions { seed, ..VerifyOptions::default() };
    opts.lmi.seed = seed;
    let report = verify_network(sc.network(), &opts);

    if wants(sc, OutputFormat::Report) {
        output::write_file(&dir.join("report"), report.to_toml().as_bytes())?;
    }
    if wants(sc, OutputFormat::Nyquist) {
        match nyquist_data(sc.network().leader(), &report.g, &opts.omega) {
            Ok(points) => output::write_nyquist(&dir.join("nyquist.csv"), &points)?,
            Err(e) => eprintln!("warning: {}: nyquist data skipped: {e}", sc.name()),
        }
    }
    let passed = report.passed();
    println!("{}: {}", sc.name(), if passed { "all hypotheses hold" } else { "hypothesis check failed" });
    for note in &report.notes {
        println!("  {note}");
    }
    Ok(if passed { Outcome::Pass } else { Outcome::HypothesisFailed })
}

fn cmd_simulate(sc: &mut Scenario, dir: &Path) -> anyhow::Result<Outcome> {
    let trace = match integrate(sc.network(), sc.controller(), sc.sim(), &sc.initial_state()) {
        Ok(trace) => trace,
        Err(Error::Divergence { t }) => {
            eprintln!("error: {}: state diverged at t = {t}", sc.name());
            return Ok(Outcome::Diverged);
        }
        Err(e) => return Err(e.into()),
    };
    if wants(sc, OutputFormat::Trace) {
        output::write_trace(&dir.join("trace.csv"), &trace)?;
    }
    let metrics = sync_metrics(&trace, DEFAULT_SETTLE_EPS)?;
    if wants(sc, OutputFormat::Metrics) {
        let cfg = sc.sim();
        let run = format!(
            "t_end = {:?}\ndt = {:?}\nmethod = \"{}\"\nsamples = {}\n",
            cfg.t_end,
            cfg.dt,
            cfg.method.name(),
            trace.len()
        );
        output::write_file(&dir.join("metrics"), (run + &metrics.to_toml()).as_bytes())?;
    }
    let worst = metrics.final_errors.iter().copied().fold(0.0, f64::max);
    println!("{}: final max error {worst:.6e}", sc.name());
    Ok(Outcome::Pass)
}

fn cmd_preset(name: &str, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let sc = preset_by_name(name)
        .ok_or_else(|| anyhow!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))?;
    match out {
        Some(path) => output::write_file(path, sc.emit().as_bytes())?,
        None => print!("{}", sc.emit()),
    }
    Ok(Outcome::Pass)
}
