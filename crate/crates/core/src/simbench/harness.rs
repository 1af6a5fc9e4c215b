// SPDX-License-Identifier: MIT OR Apache-2.0

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{relative_cost_with, score};
use super::scenario::{generate_replicate, ScenarioSpec};
use crate::cost::PrefixSums;
use crate::error::{Error, Result};
use crate::parallel::detect_detailed;
use crate::types::{
    available_threads, default_overlap, DetectorConfig, Method, PenaltyRule, Segmentation,
    TimeSeries,
};

/// Inner repeats per timing measurement; the median is reported.
pub const TIMING_REPEATS: usize = 3;

/// One replicate sweep over a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub methods: Vec<Method>,
    /// Worker counts tried for chunk and deal.
    pub workers: Vec<usize>,
    /// Chunk overlap; `None` uses `ceil((ln n)^2)`.
    pub overlap: Option<usize>,
    pub epsilon: f64,
    pub min_segment_length: usize,
    pub reps: usize,
    pub seed: u64,
    /// OS threads available to the sweep. Never changes any reported metric.
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(scenario: ScenarioSpec, n: usize) -> Self {
        Self {
            scenario,
            n,
            methods: Method::ALL.to_vec(),
            workers: vec![4],
            overlap: None,
            epsilon: crate::types::DEFAULT_EPSILON,
            min_segment_length: 1,
            reps: 200,
            seed: 0,
            threads: available_threads(),
        }
    }

    /// `(method, L)` pairs evaluated per replicate, pelt first.
    pub fn configurations(&self) -> Vec<(Method, usize)> {
        let mut out = Vec::new();
        for &method in &self.methods {
            match method {
                Method::Pelt => {
                    if !out.contains(&(Method::Pelt, 1)) {
                        out.push((Method::Pelt, 1));
                    }
                }
                _ => {
                    for &w in &self.workers {
                        if !out.contains(&(method, w)) {
                            out.push((method, w));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn detector(&self, method: Method, workers: usize) -> DetectorConfig {
        DetectorConfig {
            method,
            workers,
            overlap: self.overlap,
            penalty: PenaltyRule {
                epsilon: self.epsilon,
                dimension: 1,
            },
            min_segment_length: self.min_segment_length,
            scale_by_mad: false,
            max_threads: Some(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::config("reps must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("method list is empty"));
        }
        if self.methods.iter().any(|&m| m != Method::Pelt) && self.workers.is_empty() {
            return Err(Error::config("worker list is empty"));
        }
        if self.workers.contains(&0) {
            return Err(Error::config("worker counts must be at least 1"));
        }
        PenaltyRule::new(self.epsilon, 1)?;
        self.scenario.true_changepoints(self.n)?;
        Ok(())
    }
}

/// Metrics for one method configuration on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rep: u64,
    pub method: Method,
    pub workers: usize,
    pub num_changepoints: Option<usize>,
    pub false_alarms: Option<usize>,
    pub missed: Option<usize>,
    pub avg_location_error: Option<f64>,
    pub max_location_error: Option<usize>,
    pub penalised_cost: Option<f64>,
    /// Penalised cost minus that of serial PELT on the same data.
    pub relative_cost: Option<f64>,
    /// Largest number of changepoints returned by any split-phase worker.
    pub max_worker_changepoints: Option<usize>,
    pub changepoints: Vec<usize>,
    pub wall_time_s: Option<f64>,
    pub speedup_vs_pelt: Option<f64>,
    pub error: Option<String>,
}

impl MetricReport {
    fn failed(rep: u64, method: Method, workers: usize, err: &Error) -> Self {
        Self {
            rep,
            method,
            workers,
            num_changepoints: None,
            false_alarms: None,
            missed: None,
            avg_location_error: None,
            max_location_error: None,
            penalised_cost: None,
            relative_cost: None,
            max_worker_changepoints: None,
            changepoints: Vec::new(),
            wall_time_s: None,
            speedup_vs_pelt: None,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Mean and sample standard deviation over the replicates where a metric is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let count = v.len();
        if count == 0 {
            return Self {
                count,
                mean: None,
                sd: None,
            };
        }
        let mean = v.iter().sum::<f64>() / count as f64;
        let sd = (count > 1).then(|| {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        });
        Self {
            count,
            mean: Some(mean),
            sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub method: Method,
    pub workers: usize,
    pub reps: usize,
    pub failures: usize,
    pub num_changepoints: Stat,
    pub false_alarms: Stat,
    pub missed: Stat,
    pub avg_location_error: Stat,
    pub max_location_error: Stat,
    pub relative_cost: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub true_changepoints: Vec<usize>,
    pub beta: f64,
    pub epsilon: f64,
    pub overlap: usize,
    pub min_segment_length: usize,
    pub reps: usize,
    pub seed: u64,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub reports: Vec<MetricReport>,
    pub summary: SweepSummary,
}

/// Aggregated timing for one method configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub method: Method,
    pub workers: usize,
    pub reps: usize,
    pub mean_wall_time_s: f64,
    pub mean_pelt_time_s: f64,
    pub mean_speedup: f64,
    pub sd_speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub sweep: SweepOutput,
    pub speedup: Vec<SpeedupRow>,
}

fn report_for(
    rep: u64,
    method: Method,
    workers: usize,
    outcome: Result<(Segmentation, Option<usize>)>,
    truth: &[usize],
    prefix: &PrefixSums,
    baseline: Option<&Segmentation>,
) -> MetricReport {
    match outcome {
        Err(e) => MetricReport::failed(rep, method, workers, &e),
        Ok((seg, max_worker)) => {
            let s = score(truth, &seg.changepoints, seg.n);
            MetricReport {
                rep,
                method,
                workers,
                num_changepoints: Some(seg.changepoints.len()),
                false_alarms: Some(s.false_alarms),
                missed: Some(s.missed),
                avg_location_error: s.avg_location_error,
                max_location_error: s.max_location_error,
                penalised_cost: Some(seg.penalised_cost),
                relative_cost: baseline.map(|b| relative_cost_with(prefix, &seg, b)),
                max_worker_changepoints: max_worker,
                changepoints: seg.changepoints,
                wall_time_s: None,
                speedup_vs_pelt: None,
                error: None,
            }
        }
    }
}

fn run_detector(y: &TimeSeries, cfg: &DetectorConfig) -> Result<(Segmentation, Option<usize>)> {
    let det = detect_detailed(y, cfg)?;
    let max_worker = det
        .split
        .as_ref()
        .and_then(|m| m.per_worker.iter().map(|s| s.changepoints.len()).max());
    Ok((det.segmentation, max_worker))
}

fn evaluate_replicate(cfg: &SweepConfig, rep: u64) -> Vec<MetricReport> {
    let configs = cfg.configurations();
    let (y, truth) = match generate_replicate(&cfg.scenario, cfg.n, cfg.seed, rep) {
        Ok(v) => v,
        Err(e) => {
            return configs
                .into_iter()
                .map(|(m, w)| MetricReport::failed(rep, m, w, &e))
                .collect()
        }
    };
    let prefix = PrefixSums::build(&y);
    let pelt = run_detector(&y, &cfg.detector(Method::Pelt, 1));
    let baseline = pelt.as_ref().ok().map(|(s, _)| s.clone());
    let mut out = Vec::with_capacity(configs.len());
    for (method, workers) in configs {
        let outcome = if method == Method::Pelt {
            pelt.clone()
        } else {
            run_detector(&y, &cfg.detector(method, workers))
        };
        out.push(report_for(
            rep,
            method,
            workers,
            outcome,
            &truth,
            &prefix,
            baseline.as_ref(),
        ));
    }
    out
}

fn summarise(cfg: &SweepConfig, reports: &[MetricReport]) -> Result<SweepSummary> {
    let groups = cfg
        .configurations()
        .into_iter()
        .map(|(method, workers)| {
            let rows: Vec<&MetricReport> = reports
                .iter()
                .filter(|r| r.method == method && r.workers == workers)
                .collect();
            let ok: Vec<&&MetricReport> = rows.iter().filter(|r| r.is_ok()).collect();
            let stat =
                |f: &dyn Fn(&MetricReport) -> Option<f64>| Stat::of(ok.iter().filter_map(|r| f(r)));
            GroupSummary {
                method,
                workers,
                reps: rows.len(),
                failures: rows.len() - ok.len(),
                num_changepoints: stat(&|r| r.num_changepoints.map(|v| v as f64)),
                false_alarms: stat(&|r| r.false_alarms.map(|v| v as f64)),
                missed: stat(&|r| r.missed.map(|v| v as f64)),
                avg_location_error: stat(&|r| r.avg_location_error),
                max_location_error: stat(&|r| r.max_location_error.map(|v| v as f64)),
                relative_cost: stat(&|r| r.relative_cost),
            }
        })
        .collect();
    Ok(SweepSummary {
        scenario: cfg.scenario.clone(),
        n: cfg.n,
        true_changepoints: cfg.scenario.true_changepoints(cfg.n)?,
        beta: PenaltyRule {
            epsilon: cfg.epsilon,
            dimension: 1,
        }
        .beta(cfg.n)?,
        epsilon: cfg.epsilon,
        overlap: cfg.overlap.unwrap_or_else(|| default_overlap(cfg.n)),
        min_segment_length: cfg.min_segment_length,
        reps: cfg.reps,
        seed: cfg.seed,
        groups,
    })
}

/// Accuracy sweep: every configuration on `reps` seeded replicates.
///
/// Replicates run concurrently on `cfg.threads` threads; each replicate
/// draws from its own random stream, so the output is identical for any
/// thread count. Detector failures are recorded per row.
pub fn simulate(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;
    let per_rep: Vec<Vec<MetricReport>> = pool.install(|| {
        (0..cfg.reps as u64)
            .into_par_iter()
            .map(|rep| evaluate_replicate(cfg, rep))
            .collect()
    });
    let reports: Vec<MetricReport> = per_rep.into_iter().flatten().collect();
    let summary = summarise(cfg, &reports)?;
    Ok(SweepOutput { reports, summary })
}

/// Median wall time of [`TIMING_REPEATS`] runs of `f`, with the last result.
pub fn time_median<T>(mut f: impl FnMut() -> T) -> (T, f64) {
    let mut times = Vec::with_capacity(TIMING_REPEATS);
    let mut last = None;
    for _ in 0..TIMING_REPEATS {
        let start = Instant::now();
        let out = f();
        times.push(start.elapsed().as_secs_f64());
        last = Some(out);
    }
    times.sort_by(f64::total_cmp);
    (
        last.expect("at least one repeat"),
        times[TIMING_REPEATS / 2],
    )
}

/// Timing sweep. Replicates run one after another; each detector call may
/// use up to `min(L, cfg.threads)` threads for its workers. Data generation
/// is excluded from the timings and speedups compare against serial PELT on
/// the same replicate.
pub fn bench(cfg: &SweepConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let configs = cfg.configurations();
    let mut reports = Vec::with_capacity(cfg.reps * configs.len());
    for rep in 0..cfg.reps as u64 {
        let (y, truth) = generate_replicate(&cfg.scenario, cfg.n, cfg.seed, rep)?;
        let prefix = PrefixSums::build(&y);
        let (pelt, pelt_time) = time_median(|| run_detector(&y, &cfg.detector(Method::Pelt, 1)));
        let baseline = pelt.as_ref().ok().map(|(s, _)| s.clone());
        for &(method, workers) in &configs {
            let (outcome, elapsed) = if method == Method::Pelt {
                (pelt.clone(), pelt_time)
            } else {
                let mut det = cfg.detector(method, workers);
                det.max_threads = Some(cfg.threads.clamp(1, workers));
                time_median(|| run_detector(&y, &det))
            };
            let mut report = report_for(
                rep,
                method,
                workers,
                outcome,
                &truth,
                &prefix,
                baseline.as_ref(),
            );
            if report.is_ok() {
                report.wall_time_s = Some(elapsed);
                report.speedup_vs_pelt = Some(pelt_time / elapsed);
            }
            reports.push(report);
        }
    }
    let summary = summarise(cfg, &reports)?;
    let speedup = configs
        .into_iter()
        .map(|(method, workers)| {
            let rows: Vec<&MetricReport> = reports
                .iter()
                .filter(|r| r.method == method && r.workers == workers && r.is_ok())
                .collect();
            let times = Stat::of(rows.iter().filter_map(|r| r.wall_time_s));
            let pelt_times = Stat::of(
                rows.iter()
                    .filter_map(|r| Some(r.wall_time_s? / r.speedup_vs_pelt?)),
            );
            let gains = Stat::of(rows.iter().filter_map(|r| r.speedup_vs_pelt));
            SpeedupRow {
                method,
                workers,
                reps: rows.len(),
                mean_wall_time_s: times.mean.unwrap_or(f64::NAN),
                mean_pelt_time_s: pelt_times.mean.unwrap_or(f64::NAN),
                mean_speedup: gains.mean.unwrap_or(f64::NAN),
                sd_speedup: gains.sd,
            }
        })
        .collect();
    Ok(BenchOutput {
        sweep: SweepOutput { reports, summary },
        speedup,
    })
}
