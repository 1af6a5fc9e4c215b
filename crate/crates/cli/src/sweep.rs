// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use parcpt_core::simbench::report::{
    write_reports_csv, write_speedup_csv, write_summary_json, write_timings_csv,
};
use parcpt_core::simbench::{bench, simulate, BenchOutput, SweepOutput, SweepSummary};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn create(dir: &Path, name: &str) -> CliResult<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok((BufWriter::new(file), path))
}

fn print_summary(s: &SweepSummary) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    println!(
        "scenario {} n={} delta={} reps={} beta={:.4}",
        s.scenario.id, s.n, s.scenario.delta_mu, s.reps, s.beta
    );
    for g in &s.groups {
        println!(
            "  {:<5} L={:<3} cps={} fa={} missed={} loc_err={} rel_cost={}{}",
            g.method.as_str(),
            g.workers,
            fmt(g.num_changepoints.mean),
            fmt(g.false_alarms.mean),
            fmt(g.missed.mean),
            fmt(g.avg_location_error.mean),
            fmt(g.relative_cost.mean),
            if g.failures > 0 {
                format!(" failures={}", g.failures)
            } else {
                String::new()
            },
        );
    }
}

fn advise(cfg: &RunConfig) {
    for run in &cfg.runs {
        for (method, workers) in run.configurations() {
            for note in run.detector(method, workers).advisories(run.n) {
                eprintln!("warning: n={}: {note}", run.n);
            }
        }
    }
}

pub fn run_simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    advise(cfg);
    let outputs: Vec<SweepOutput> = cfg.runs.iter().map(simulate).collect::<Result<_, _>>()?;
    outputs.iter().for_each(|o| print_summary(&o.summary));
    let refs: Vec<&SweepOutput> = outputs.iter().collect();
    let summaries: Vec<&SweepSummary> = outputs.iter().map(|o| &o.summary).collect();

    let (w, reps_path) = create(&cfg.out, "simulate_reps.csv")?;
    write_reports_csv(w, &refs)?;
    let (w, summary_path) = create(&cfg.out, "simulate_summary.json")?;
    write_summary_json(w, &summaries)?;
    Ok(vec![reps_path, summary_path])
}

pub fn run_bench(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    advise(cfg);
    let outputs: Vec<BenchOutput> = cfg.runs.iter().map(bench).collect::<Result<_, _>>()?;
    for o in &outputs {
        print_summary(&o.sweep.summary);
        for r in &o.speedup {
            println!(
                "  speedup {:<5} L={:<3} {:.3} (method {:.6}s, pelt {:.6}s)",
                r.method.as_str(),
                r.workers,
                r.mean_speedup,
                r.mean_wall_time_s,
                r.mean_pelt_time_s
            );
        }
    }
    let sweeps: Vec<&SweepOutput> = outputs.iter().map(|o| &o.sweep).collect();
    let summaries: Vec<&SweepSummary> = outputs.iter().map(|o| &o.sweep.summary).collect();
    let benches: Vec<&BenchOutput> = outputs.iter().collect();

    let mut paths = Vec::new();
    let (w, p) = create(&cfg.out, "bench_reps.csv")?;
    write_reports_csv(w, &sweeps)?;
    paths.push(p);
    let (w, p) = create(&cfg.out, "bench_summary.json")?;
    write_summary_json(w, &summaries)?;
    paths.push(p);
    let (w, p) = create(&cfg.out, "bench_timings.csv")?;
    write_timings_csv(w, &sweeps)?;
    paths.push(p);
    let (w, p) = create(&cfg.out, "bench_speedup.csv")?;
    write_speedup_csv(w, &benches)?;
    paths.push(p);
    Ok(paths)
}
