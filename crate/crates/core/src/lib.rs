// SPDX-License-Identifier: MIT OR Apache-2.0

//! Penalised-cost changepoint detection.
//!
//! The crate solves the penalised squared-error segmentation problem exactly
//! over a restricted candidate set (optimal partitioning with PELT pruning)
//! and parallelises it with two split/merge schedulers:
//!
//! * **Chunk** hands each worker a contiguous window of the data with an
//!   overlap of `V` points either side of each interior boundary.
//! * **Deal** hands each worker every `L`-th candidate index over the full
//!   data, like dealing cards.
//!
//! Both finish with a single PELT pass over the union of the workers'
//! changepoints. The [`simbench`] module generates the piecewise-constant
//! Gaussian scenarios and scores detectors against them.

#![forbid(unsafe_code)]

pub mod cost;
pub mod dp;
mod error;
pub mod parallel;
pub mod simbench;
mod types;

pub use cost::{direct_segment_cost, CostFunction, PrefixSums};
pub use dp::{brute_force_partition, optimal_partition, optimal_partition_range, DpState};
pub use error::{Error, Result};
pub use parallel::{
    chunk_split, deal_quota, deal_split, detect, detect_detailed, plan_for, run_merge_phase,
    run_split_phase, Detection, MergeInput, SplitPlan, WorkerTask,
};
pub use types::{
    default_overlap, resolve_penalty, CandidateSet, DetectorConfig, Method, PenaltyRule,
    Segmentation, TimeSeries, DEFAULT_EPSILON,
};
