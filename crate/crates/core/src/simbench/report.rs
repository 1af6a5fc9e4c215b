// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats written by the simulation and benchmark sweeps.
//!
//! * replicate CSV: one row per (n, delta) run x replicate x method x worker
//!   count, columns [`REPORT_COLUMNS`];
//! * summary JSON: `{"runs": [SweepSummary, ...]}`;
//! * timing CSV: per-replicate wall times and speedups, columns
//!   [`TIMING_COLUMNS`];
//! * speedup CSV: mean timings per run x method x worker count, columns
//!   [`SPEEDUP_COLUMNS`].
//!
//! Wall times only ever appear in the last two, so the replicate CSV and the
//! summary JSON are byte-reproducible from the seed.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::harness::{BenchOutput, SweepOutput, SweepSummary};
use crate::error::{Error, Result};

pub const REPORT_COLUMNS: [&str; 16] = [
    "scenario",
    "n",
    "delta_mu",
    "rep",
    "method",
    "workers",
    "num_changepoints",
    "false_alarms",
    "missed",
    "avg_location_error",
    "max_location_error",
    "penalised_cost",
    "relative_cost",
    "max_worker_changepoints",
    "changepoints",
    "error",
];

pub const TIMING_COLUMNS: [&str; 8] = [
    "scenario",
    "n",
    "delta_mu",
    "rep",
    "method",
    "workers",
    "wall_time_s",
    "speedup_vs_pelt",
];

pub const SPEEDUP_COLUMNS: [&str; 10] = [
    "scenario",
    "n",
    "delta_mu",
    "method",
    "workers",
    "reps",
    "mean_wall_time_s",
    "mean_pelt_time_s",
    "mean_speedup",
    "sd_speedup",
];

#[derive(Serialize)]
struct ReportRow<'a> {
    scenario: String,
    n: usize,
    delta_mu: f64,
    rep: u64,
    method: &'a str,
    workers: usize,
    num_changepoints: Option<usize>,
    false_alarms: Option<usize>,
    missed: Option<usize>,
    avg_location_error: Option<f64>,
    max_location_error: Option<usize>,
    penalised_cost: Option<f64>,
    relative_cost: Option<f64>,
    max_worker_changepoints: Option<usize>,
    changepoints: String,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    scenario: String,
    n: usize,
    delta_mu: f64,
    rep: u64,
    method: &'a str,
    workers: usize,
    wall_time_s: Option<f64>,
    speedup_vs_pelt: Option<f64>,
}

#[derive(Serialize)]
struct SpeedupCsvRow<'a> {
    scenario: String,
    n: usize,
    delta_mu: f64,
    method: &'a str,
    workers: usize,
    reps: usize,
    mean_wall_time_s: f64,
    mean_pelt_time_s: f64,
    mean_speedup: f64,
    sd_speedup: Option<f64>,
}

/// Top-level shape of the summary JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub runs: Vec<SweepSummary>,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("write failed: {e}"))
}

fn join(cps: &[usize]) -> String {
    cps.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_reports_csv<W: Write>(out: W, runs: &[&SweepOutput]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(REPORT_COLUMNS).map_err(io_err)?;
    for run in runs {
        let s = &run.summary;
        for r in &run.reports {
            w.serialize(ReportRow {
                scenario: s.scenario.id.to_string(),
                n: s.n,
                delta_mu: s.scenario.delta_mu,
                rep: r.rep,
                method: r.method.as_str(),
                workers: r.workers,
                num_changepoints: r.num_changepoints,
                false_alarms: r.false_alarms,
                missed: r.missed,
                avg_location_error: r.avg_location_error,
                max_location_error: r.max_location_error,
                penalised_cost: r.penalised_cost,
                relative_cost: r.relative_cost,
                max_worker_changepoints: r.max_worker_changepoints,
                changepoints: join(&r.changepoints),
                error: r.error.as_deref(),
            })
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_timings_csv<W: Write>(out: W, runs: &[&SweepOutput]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(TIMING_COLUMNS).map_err(io_err)?;
    for run in runs {
        let s = &run.summary;
        for r in &run.reports {
            w.serialize(TimingRow {
                scenario: s.scenario.id.to_string(),
                n: s.n,
                delta_mu: s.scenario.delta_mu,
                rep: r.rep,
                method: r.method.as_str(),
                workers: r.workers,
                wall_time_s: r.wall_time_s,
                speedup_vs_pelt: r.speedup_vs_pelt,
            })
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_speedup_csv<W: Write>(out: W, runs: &[&BenchOutput]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(SPEEDUP_COLUMNS).map_err(io_err)?;
    for run in runs {
        let s = &run.sweep.summary;
        for r in &run.speedup {
            w.serialize(SpeedupCsvRow {
                scenario: s.scenario.id.to_string(),
                n: s.n,
                delta_mu: s.scenario.delta_mu,
                method: r.method.as_str(),
                workers: r.workers,
                reps: r.reps,
                mean_wall_time_s: r.mean_wall_time_s,
                mean_pelt_time_s: r.mean_pelt_time_s,
                mean_speedup: r.mean_speedup,
                sd_speedup: r.sd_speedup,
            })
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_summary_json<W: Write>(mut out: W, runs: &[&SweepSummary]) -> Result<()> {
    let file = SummaryFile {
        runs: runs.iter().map(|s| (*s).clone()).collect(),
    };
    serde_json::to_writer_pretty(&mut out, &file).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbench::{simulate, ScenarioId, ScenarioSpec, SweepConfig};

    #[test]
    fn csv_header_and_rows() {
        let scenario = ScenarioSpec::standard(ScenarioId::A, 2.0).unwrap();
        let mut cfg = SweepConfig::new(scenario, 200);
        cfg.reps = 2;
        cfg.workers = vec![2];
        let out = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[&out]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
        let first = lines.next().unwrap();
        assert!(first.starts_with("A,200,2.0,0,pelt,1,"), "{first}");
        assert_eq!(lines.count(), 2 * 3 - 1);

        let mut json = Vec::new();
        write_summary_json(&mut json, &[&out.summary]).unwrap();
        let parsed: SummaryFile = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed.runs, vec![out.summary]);
    }
}
