// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation and benchmarking: piecewise-constant Gaussian scenarios,
//! accuracy scoring, replicate sweeps and CSV/JSON reporting.

mod harness;
mod metrics;
pub mod report;
mod scenario;

pub use harness::{
    bench, simulate, time_median, BenchOutput, GroupSummary, MetricReport, SpeedupRow, Stat,
    SweepConfig, SweepOutput, SweepSummary, TIMING_REPEATS,
};
pub use metrics::{relative_cost, score, tolerance, Score};
pub use scenario::{generate_replicate, generate_series, replicate_rng, ScenarioId, ScenarioSpec};
