use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use rollout_fabrics::harness::{self, Mode, RunOptions, Scenario};
use rollout_fabrics::FabricError;

const EXIT_CONFIG: u8 = 2;
const EXIT_PLANNER: u8 = 3;

/// Decentralized multi-arm planning with rollout fabrics.
#[derive(Parser)]
#[command(name = "rfab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario in one mode.
    Run {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Rollout horizon K in steps.
        #[arg(long)]
        horizon: Option<usize>,
        /// Seed; also resamples goals that declare a region.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trajectory.csv and metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run many seeds of several modes and tabulate.
    Batch {
        scenario: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long, value_delimiter = ',', value_parser = parse_mode, default_value = "mrdf,rf,rf-cv")]
        modes: Vec<Mode>,
        #[arg(long)]
        out: PathBuf,
        /// First seed of the batch.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Median per-step compute time of RF for several horizons.
    BenchHorizon {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80")]
        horizons: Vec<usize>,
        /// Steps simulated per horizon.
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: FabricError| e.to_string())
}

enum Failure {
    Config(String),
    Planner(String),
}

impl From<FabricError> for Failure {
    fn from(e: FabricError) -> Self {
        match e {
            FabricError::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Planner(other.to_string()),
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("{}: {e}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
    fs::write(path, text).map_err(io(path))
}

fn run(
    scenario: &Path,
    mode: Mode,
    horizon: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut scenario = Scenario::load(scenario)?;
    if let Some(s) = seed {
        scenario = harness::randomize(&scenario, s)?;
    }
    let options = RunOptions {
        horizon,
        record_log: out.is_some(),
        ..RunOptions::new(mode)
    };
    info!("running '{}' in {mode} mode", scenario.name);
    let outcome = harness::run_with(&scenario, &options)?;
    let m = &outcome.metrics;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io(dir))?;
        write_json(&dir.join("metrics.json"), m)?;
        if let Some(log) = &outcome.log {
            let path = dir.join("trajectory.csv");
            let file = fs::File::create(&path).map_err(io(&path))?;
            log.write_csv(std::io::BufWriter::new(file))?;
        }
    }
    println!(
        "mode={mode} success={} time={} collision={} min_clearance={} deadlocks={} compute_median_ms={:.3} compute_p95_ms={:.3}",
        m.success,
        m.time_to_success.map_or("n/a".into(), |t| format!("{t:.2}")),
        m.collision,
        m.min_clearance.map_or("n/a".into(), |c| format!("{c:.4}")),
        m.deadlock_count(),
        m.compute_median_ms,
        m.compute_p95_ms,
    );
    match &m.failure {
        Some(cause) => Err(Failure::Planner(cause.clone())),
        None => Ok(()),
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            mode,
            horizon,
            seed,
            out,
        } => run(&scenario, mode, horizon, seed, out.as_deref()),
        Command::Batch {
            scenario,
            runs,
            modes,
            out,
            seed,
            horizon,
        } => {
            if runs == 0 {
                return Err(Failure::Config("--runs must be at least 1".into()));
            }
            let scenario = Scenario::load(&scenario)?;
            let report = harness::batch(&scenario, runs, seed, &modes, horizon)?;
            fs::create_dir_all(&out).map_err(io(&out))?;
            let table = report.table();
            fs::write(out.join("table.txt"), &table).map_err(io(&out))?;
            write_json(&out.join("report.json"), &report)?;
            print!("{table}");
            Ok(())
        }
        Command::BenchHorizon {
            scenario,
            horizons,
            steps,
            out,
        } => {
            if horizons.is_empty() || horizons.contains(&0) {
                return Err(Failure::Config("horizons must be positive".into()));
            }
            let scenario = Scenario::load(&scenario)?;
            let timings = harness::bench_horizon(&scenario, &horizons, steps)?;
            println!("{:>8} {:>12} {:>12}", "horizon", "median [ms]", "p95 [ms]");
            for t in &timings {
                println!("{:>8} {:>12.3} {:>12.3}", t.horizon, t.median_ms, t.p95_ms);
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(io(&dir))?;
                write_json(&dir.join("horizons.json"), &timings)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RFAB_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            error!("{msg}");
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Planner(msg)) => {
            error!("{msg}");
            eprintln!("planner failure: {msg}");
            ExitCode::from(EXIT_PLANNER)
        }
    }
}
