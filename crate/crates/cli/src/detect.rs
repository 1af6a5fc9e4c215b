// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;
use std::time::Instant;

use parcpt_core::{
    detect_detailed, optimal_partition_range, CandidateSet, DetectorConfig, Method, PenaltyRule,
    PrefixSums, Segmentation, TimeSeries,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Printed to stdout by `parcpt detect`.
#[derive(Debug, Serialize)]
pub struct DetectOutput {
    pub n: usize,
    pub d: usize,
    pub method: Method,
    pub beta: f64,
    pub changepoints: Vec<usize>,
    pub penalized_cost: f64,
    pub wall_time_s: f64,
}

/// Reads a numeric CSV: one row per observation, one column per dimension.
pub fn read_series(path: &Path, header: bool) -> CliResult<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut dim = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(CliError::Input(format!(
                    "line {line}: expected {d} columns, found {}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "line {line}, column {}: '{cell}' is not a number",
                    col + 1
                ))
            })?;
            values.push(v);
        }
    }
    let dim =
        dim.ok_or_else(|| CliError::Input(format!("{} contains no observations", path.display())))?;
    Ok(TimeSeries::from_flat(values, dim)?)
}

/// Candidate changepoints from a file holding either a previous `detect`
/// result (its `changepoints` field), a JSON array, or whitespace/comma
/// separated integers.
pub fn read_candidates(path: &Path, n: usize) -> CliResult<CandidateSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let bad = |what: String| CliError::Input(format!("{}: {what}", path.display()));
    let indices: Vec<usize> = match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(serde_json::Value::Object(map)) => {
            let cps = map
                .get("changepoints")
                .ok_or_else(|| bad("JSON object has no 'changepoints' field".into()))?;
            serde_json::from_value(cps.clone()).map_err(|e| bad(e.to_string()))?
        }
        Ok(v @ serde_json::Value::Array(_)) => {
            serde_json::from_value(v).map_err(|e| bad(e.to_string()))?
        }
        _ => text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse()
                    .map_err(|_| bad(format!("'{t}' is not a non-negative integer")))
            })
            .collect::<CliResult<_>>()?,
    };
    Ok(CandidateSet::from_unsorted(indices, n)?)
}

fn restricted_pelt(
    y: &TimeSeries,
    cfg: &DetectorConfig,
    candidates: &CandidateSet,
) -> CliResult<Segmentation> {
    let n = y.len();
    cfg.validate(n)?;
    let scaled = if cfg.scale_by_mad {
        y.scaled_by_mad()
    } else {
        y.clone()
    };
    let beta = PenaltyRule {
        dimension: scaled.dim(),
        ..cfg.penalty
    }
    .beta(n)?;
    let prefix = PrefixSums::build(&scaled);
    Ok(optimal_partition_range(
        &prefix,
        1,
        n,
        candidates.indices(),
        beta,
        true,
        cfg.min_segment_length,
    )?)
}

pub struct DetectRequest<'a> {
    pub input: &'a Path,
    pub header: bool,
    pub candidates: Option<&'a Path>,
    pub config: DetectorConfig,
}

pub fn run(req: &DetectRequest<'_>) -> CliResult<DetectOutput> {
    let y = read_series(req.input, req.header)?;
    let cfg = &req.config;
    for note in cfg.advisories(y.len()) {
        eprintln!("warning: {note}");
    }
    let started = Instant::now();
    let seg = match req.candidates {
        Some(path) => {
            if cfg.method != Method::Pelt {
                return Err(CliError::Config(
                    "--candidates is only supported with --method pelt".into(),
                ));
            }
            let candidates = read_candidates(path, y.len())?;
            restricted_pelt(&y, cfg, &candidates)?
        }
        None => detect_detailed(&y, cfg)?.segmentation,
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    Ok(DetectOutput {
        n: y.len(),
        d: y.dim(),
        method: cfg.method,
        beta: seg.beta,
        changepoints: seg.changepoints,
        penalized_cost: seg.penalised_cost,
        wall_time_s,
    })
}
