// SPDX-License-Identifier: MIT OR Apache-2.0

//! Split/merge parallelisation of the penalised dynamic program.
//!
//! A [`SplitPlan`] assigns each of `L` workers a data window and a candidate
//! set. Workers solve their restricted problems independently; the parent
//! then re-solves over the full data with the union of the workers'
//! changepoints as the only candidates.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::cost::PrefixSums;
use crate::dp::optimal_partition_range;
use crate::error::{Error, Result};
use crate::types::{CandidateSet, DetectorConfig, Method, PenaltyRule, Segmentation, TimeSeries};

/// One worker's share of the split phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerTask {
    /// First observation the worker sees (1-based, inclusive).
    pub data_start: usize,
    /// Last observation the worker sees (inclusive).
    pub data_end: usize,
    /// Candidate changepoints assigned to the worker, in global coordinates.
    pub candidates: CandidateSet,
}

impl WorkerTask {
    /// Candidates the worker can actually fit. A changepoint at the last
    /// observation of its window would leave an empty closing segment.
    pub fn effective_candidates(&self) -> &[usize] {
        let c = self.candidates.indices();
        let cut = c.partition_point(|&b| b < self.data_end);
        &c[..cut]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub method: Method,
    pub n: usize,
    pub tasks: Vec<WorkerTask>,
}

impl SplitPlan {
    pub fn workers(&self) -> usize {
        self.tasks.len()
    }
}

/// Output of the split phase: each worker's segmentation (costed over its own
/// window) and the sorted, deduplicated union of their changepoints.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeInput {
    pub per_worker: Vec<Segmentation>,
    pub union: CandidateSet,
}

impl MergeInput {
    pub fn from_workers(per_worker: Vec<Segmentation>, n: usize) -> Result<Self> {
        let all: Vec<usize> = per_worker
            .iter()
            .flat_map(|s| s.changepoints.iter().copied())
            .collect();
        let union = CandidateSet::from_unsorted(all, n)?;
        Ok(Self { per_worker, union })
    }
}

/// Contiguous windows with `overlap` points either side of each interior
/// boundary.
///
/// With `f = floor(n / L)`, worker 1 covers `1..=f+V`, worker `i` covers
/// `(i-1)f-V ..= if+V` and worker `L` covers `(L-1)f-V ..= n-1`. Each worker
/// sees only the data in its window (the last worker's data runs to `n`).
pub fn chunk_split(n: usize, workers: usize, overlap: usize) -> Result<SplitPlan> {
    if n < 2 {
        return Err(Error::input(format!("need n >= 2, got {n}")));
    }
    if workers == 0 {
        return Err(Error::config("chunk needs at least one worker"));
    }
    if workers == 1 {
        return Ok(SplitPlan {
            method: Method::Chunk,
            n,
            tasks: vec![WorkerTask {
                data_start: 1,
                data_end: n,
                candidates: CandidateSet::full(n),
            }],
        });
    }
    let width = n / workers;
    if width == 0 {
        return Err(Error::config(format!(
            "{workers} workers leave empty windows for n = {n}"
        )));
    }
    if width + overlap >= n {
        return Err(Error::config(format!(
            "first window 1..={} does not fit inside n = {n}",
            width + overlap
        )));
    }
    if overlap >= width {
        return Err(Error::config(format!(
            "overlap {overlap} must be smaller than the window width {width}"
        )));
    }
    if workers >= 3 && 2 * overlap >= width {
        return Err(Error::config(format!(
            "overlap regions intersect: need 2V < floor(n/L), got V = {overlap}, floor(n/L) = {width}"
        )));
    }
    let mut tasks = Vec::with_capacity(workers);
    for i in 1..=workers {
        let lo = if i == 1 { 1 } else { (i - 1) * width - overlap };
        let (hi, data_end) = if i == workers {
            (n - 1, n)
        } else {
            let hi = i * width + overlap;
            (hi, hi)
        };
        tasks.push(WorkerTask {
            data_start: lo,
            data_end,
            candidates: CandidateSet::new((lo..=hi).collect(), n)?,
        });
    }
    Ok(SplitPlan {
        method: Method::Chunk,
        n,
        tasks,
    })
}

/// `Q_a(b, c)`: the largest integer `Q` with `Q * b + (a mod b) < c`, or
/// `None` if no non-negative `Q` qualifies.
pub fn deal_quota(a: usize, b: usize, c: usize) -> Option<usize> {
    let r = a % b;
    (c > r).then(|| (c - 1 - r) / b)
}

/// Round-robin candidate assignment: worker `i` gets `{i, i+L, i+2L, ...}`
/// up to `n - 1` and sees the full data.
pub fn deal_split(n: usize, workers: usize) -> Result<SplitPlan> {
    if n < 2 {
        return Err(Error::input(format!("need n >= 2, got {n}")));
    }
    if workers == 0 || workers > n - 1 {
        return Err(Error::config(format!(
            "deal needs 1 <= L <= n - 1, got L = {workers} for n = {n}"
        )));
    }
    let mut tasks = Vec::with_capacity(workers);
    for i in 1..=workers {
        let r = i % workers;
        let q = deal_quota(i, workers, n).unwrap_or(0);
        let first = if r == 0 { 1 } else { 0 };
        let indices: Vec<usize> = (first..=q).map(|k| k * workers + r).collect();
        tasks.push(WorkerTask {
            data_start: 1,
            data_end: n,
            candidates: CandidateSet::new(indices, n)?,
        });
    }
    Ok(SplitPlan {
        method: Method::Deal,
        n,
        tasks,
    })
}

/// Runs `f(0..count)` on up to `threads` scoped threads and returns the
/// results in index order, so the output never depends on scheduling.
fn run_indexed<T, F>(count: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..count).map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..threads.min(count) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot lock")
                .expect("every index ran")
        })
        .collect()
}

pub(crate) fn split_phase(
    prefix: &PrefixSums,
    plan: &SplitPlan,
    beta: f64,
    min_len: usize,
    threads: usize,
) -> Result<MergeInput> {
    if plan.n != prefix.n() {
        return Err(Error::input(format!(
            "plan built for n = {} but series has n = {}",
            plan.n,
            prefix.n()
        )));
    }
    let per_worker = run_indexed(plan.tasks.len(), threads, |i| {
        let task = &plan.tasks[i];
        optimal_partition_range(
            prefix,
            task.data_start,
            task.data_end,
            task.effective_candidates(),
            beta,
            true,
            min_len,
        )
    })?;
    MergeInput::from_workers(per_worker, plan.n)
}

pub(crate) fn merge_phase(
    prefix: &PrefixSums,
    merged: &MergeInput,
    beta: f64,
    min_len: usize,
) -> Result<Segmentation> {
    let n = prefix.n();
    optimal_partition_range(prefix, 1, n, merged.union.indices(), beta, true, min_len)
}

/// Runs every worker of `plan` on `y` and gathers their changepoints.
pub fn run_split_phase(y: &TimeSeries, plan: &SplitPlan, beta: f64) -> Result<MergeInput> {
    let prefix = PrefixSums::build(y);
    split_phase(&prefix, plan, beta, 1, crate::types::available_threads())
}

/// Re-solves over the full data with the union of split-phase changepoints.
pub fn run_merge_phase(y: &TimeSeries, merged: &MergeInput, beta: f64) -> Result<Segmentation> {
    merge_phase(&PrefixSums::build(y), merged, beta, 1)
}

/// A finished detection with the intermediate split-phase output, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub segmentation: Segmentation,
    pub beta: f64,
    pub split: Option<MergeInput>,
}

/// Builds the split plan `cfg` asks for on a series of length `n`.
pub fn plan_for(cfg: &DetectorConfig, n: usize) -> Result<Option<SplitPlan>> {
    match cfg.method {
        Method::Pelt => Ok(None),
        Method::Chunk => chunk_split(n, cfg.workers, cfg.overlap_for(n)).map(Some),
        Method::Deal => deal_split(n, cfg.workers).map(Some),
    }
}

/// Detects changepoints with the configured method, keeping the split-phase
/// output for inspection.
pub fn detect_detailed(y: &TimeSeries, cfg: &DetectorConfig) -> Result<Detection> {
    let n = y.len();
    cfg.validate(n)?;
    let scaled;
    let y = if cfg.scale_by_mad {
        scaled = y.scaled_by_mad();
        &scaled
    } else {
        y
    };
    let rule = PenaltyRule {
        dimension: y.dim(),
        ..cfg.penalty
    };
    let beta = rule.beta(n)?;
    let plan = plan_for(cfg, n)?;
    let prefix = PrefixSums::build(y);
    let min_len = cfg.min_segment_length;
    match plan {
        None => {
            let full = CandidateSet::full(n);
            let segmentation =
                optimal_partition_range(&prefix, 1, n, full.indices(), beta, true, min_len)?;
            Ok(Detection {
                segmentation,
                beta,
                split: None,
            })
        }
        Some(plan) => {
            let threads = cfg.thread_cap().min(plan.workers());
            let merged = split_phase(&prefix, &plan, beta, min_len, threads)?;
            let segmentation = merge_phase(&prefix, &merged, beta, min_len)?;
            Ok(Detection {
                segmentation,
                beta,
                split: Some(merged),
            })
        }
    }
}

/// Detects changepoints in `y` with the method, penalty and worker layout in `cfg`.
pub fn detect(y: &TimeSeries, cfg: &DetectorConfig) -> Result<Segmentation> {
    detect_detailed(y, cfg).map(|d| d.segmentation)
}
