// SPDX-License-Identifier: MIT OR Apache-2.0

//! `parcpt`: penalised-cost changepoint detection with PELT, Chunk and Deal.

mod config;
mod detect;
mod error;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parcpt_core::{DetectorConfig, Method, DEFAULT_EPSILON};

use crate::config::{Defaults, RunConfig, SweepFlags};
use crate::error::{CliError, CliResult};

/// Environment variable capping the number of OS threads.
const THREADS_ENV: &str = "PARCPT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "parcpt",
    version,
    about = "Penalised-cost changepoint detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect changepoints in a CSV series and print the result as JSON.
    Detect(DetectArgs),
    /// Run a replicated accuracy sweep on a synthetic scenario.
    Simulate(SweepArgs),
    /// Like `simulate`, but also time each method against PELT.
    Bench(SweepArgs),
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// CSV file, one observation per row, one column per dimension.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "pelt")]
    method: String,
    /// Number of workers L (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Chunk overlap V (default: ceil((ln n)^2)).
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// The first CSV row is a header.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 1)]
    min_segment_length: usize,
    /// Rescale each column by a MAD estimate of its noise sd.
    #[arg(long)]
    scale_mad: bool,
    /// Restrict changepoints to this set (a detect result, JSON array or integer list).
    #[arg(long)]
    candidates: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario A..E.
    #[arg(long)]
    scenario: Option<String>,
    /// Series lengths, comma separated.
    #[arg(long)]
    n: Option<String>,
    /// Mean shifts, comma separated.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Methods, comma separated (pelt, chunk, deal).
    #[arg(long)]
    methods: Option<String>,
    /// Worker counts, comma separated.
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    min_segment_length: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<SweepArgs> for SweepFlags {
    fn from(a: SweepArgs) -> Self {
        SweepFlags {
            config: a.config,
            scenario: a.scenario,
            n: a.n,
            delta: a.delta,
            reps: a.reps,
            seed: a.seed,
            methods: a.methods,
            workers: a.workers,
            overlap: a.overlap,
            epsilon: a.epsilon,
            noise_sd: a.noise_sd,
            min_segment_length: a.min_segment_length,
            out: a.out,
        }
    }
}

fn thread_limit() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

fn available() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = thread_limit()?;
    match cli.command {
        Command::Detect(a) => {
            let method: Method = a.method.parse()?;
            let mut config = DetectorConfig::new(method)
                .with_epsilon(a.epsilon)
                .with_min_segment_length(a.min_segment_length)
                .with_max_threads(threads.unwrap_or_else(available));
            if let Some(w) = a.workers {
                config = config.with_workers(w);
            }
            if let Some(v) = a.overlap {
                config = config.with_overlap(v);
            }
            config.scale_by_mad = a.scale_mad;
            let out = detect::run(&detect::DetectRequest {
                input: &a.input,
                header: a.header,
                candidates: a.candidates.as_deref(),
                config,
            })?;
            let json =
                serde_json::to_string(&out).map_err(|e| CliError::Internal(e.to_string()))?;
            println!("{json}");
        }
        Command::Simulate(a) => {
            let defaults = Defaults {
                methods: Method::ALL.to_vec(),
                workers: vec![4],
                reps: 200,
            };
            let cfg = RunConfig::resolve(&a.into(), defaults, threads.unwrap_or_else(available))?;
            for p in sweep::run_simulate(&cfg)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Bench(a) => {
            let defaults = Defaults {
                methods: Method::ALL.to_vec(),
                workers: vec![1, 2, 4, 8],
                reps: 200,
            };
            let cfg = RunConfig::resolve(&a.into(), defaults, threads.unwrap_or_else(available))?;
            for p in sweep::run_bench(&cfg)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
