// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default slack added to the SIC-style penalty.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Ordered, finite, `d`-dimensional observations stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
}

impl TimeSeries {
    /// Builds a series from `n * dim` row-major values.
    pub fn from_flat(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("observation dimension must be at least 1"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "{} values do not split into rows of dimension {dim}",
                values.len()
            )));
        }
        let n = values.len() / dim;
        if n < 2 {
            return Err(Error::input(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value at observation {}, column {}",
                pos / dim + 1,
                pos % dim + 1
            )));
        }
        Ok(Self { values, dim })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    /// Builds a series from one vector per observation; all rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::input(format!(
                    "observation {} has dimension {}, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(values, dim)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Always false; a valid series holds at least two observations.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observation `i`, 1-based to match changepoint indexing.
    pub fn observation(&self, i: usize) -> &[f64] {
        &self.values[(i - 1) * self.dim..i * self.dim]
    }

    /// Rescales every column by a robust noise estimate: the median absolute
    /// deviation of first differences, divided by `sqrt(2)` and converted to
    /// a standard deviation. Columns whose estimate is zero are left as is.
    pub fn scaled_by_mad(&self) -> Self {
        let n = self.len();
        let mut values = self.values.clone();
        for k in 0..self.dim {
            let mut diffs: Vec<f64> = (1..n)
                .map(|i| self.values[i * self.dim + k] - self.values[(i - 1) * self.dim + k])
                .collect();
            let centre = median(&mut diffs);
            let mut dev: Vec<f64> = diffs.iter().map(|x| (x - centre).abs()).collect();
            let sigma = 1.482_602_218_505_602 * median(&mut dev) / std::f64::consts::SQRT_2;
            if sigma > 0.0 {
                for i in 0..n {
                    values[i * self.dim + k] /= sigma;
                }
            }
        }
        Self {
            values,
            dim: self.dim,
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m == 0 {
        0.0
    } else if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Strictly increasing admissible changepoint indices, each in `[1, n-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSet {
    indices: Vec<usize>,
}

impl CandidateSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&b| b == 0 || b >= n) {
            return Err(Error::input(format!(
                "candidate {bad} outside [1, {}]",
                n.saturating_sub(1)
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(
                "candidate indices must be strictly increasing",
            ));
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, n)
    }

    /// Every admissible index `{1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (1..n).collect(),
        }
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, b: usize) -> bool {
        self.indices.binary_search(&b).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

/// Estimated changepoints `0 < tau_1 < ... < tau_m < n` with their penalised cost.
///
/// The cost counts one `beta` per changepoint; the closing segment carries no
/// penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub n: usize,
    pub changepoints: Vec<usize>,
    pub penalised_cost: f64,
    pub beta: f64,
}

impl Segmentation {
    pub fn num_changepoints(&self) -> usize {
        self.changepoints.len()
    }

    /// Inclusive 1-based `(start, end)` bounds of the implied segments.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.changepoints.len() + 1);
        let mut start = 1;
        for &cp in &self.changepoints {
            out.push((start, cp));
            start = cp + 1;
        }
        out.push((start, self.n));
        out
    }
}

/// `(2 + eps) ln n` for univariate data, `(d + 1)(1 + eps) ln n` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRule {
    pub epsilon: f64,
    pub dimension: usize,
}

impl Default for PenaltyRule {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            dimension: 1,
        }
    }
}

impl PenaltyRule {
    pub fn new(epsilon: f64, dimension: usize) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::config(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        if dimension == 0 {
            return Err(Error::config("penalty dimension must be at least 1"));
        }
        Ok(Self { epsilon, dimension })
    }

    pub fn beta(&self, n: usize) -> Result<f64> {
        resolve_penalty(*self, n)
    }
}

pub fn resolve_penalty(rule: PenaltyRule, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::input(format!("penalty needs n >= 2, got {n}")));
    }
    let log_n = (n as f64).ln();
    Ok(if rule.dimension <= 1 {
        (2.0 + rule.epsilon) * log_n
    } else {
        (rule.dimension as f64 + 1.0) * (1.0 + rule.epsilon) * log_n
    })
}

/// Recommended Chunk overlap `ceil((ln n)^2)`.
pub fn default_overlap(n: usize) -> usize {
    let log_n = (n.max(1) as f64).ln();
    (log_n * log_n).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pelt,
    Chunk,
    Deal,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pelt, Method::Chunk, Method::Deal];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pelt => "pelt",
            Method::Chunk => "chunk",
            Method::Deal => "deal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pelt" => Ok(Method::Pelt),
            "chunk" => Ok(Method::Chunk),
            "deal" => Ok(Method::Deal),
            other => Err(Error::config(format!(
                "unknown method '{other}' (expected pelt, chunk or deal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub method: Method,
    /// Number of split-phase workers `L`.
    pub workers: usize,
    /// Chunk overlap `V`; `None` picks [`default_overlap`] for the series length.
    pub overlap: Option<usize>,
    pub penalty: PenaltyRule,
    pub min_segment_length: usize,
    /// Divide each column by a MAD-of-differences noise estimate before fitting.
    pub scale_by_mad: bool,
    /// Upper bound on OS threads used to run the `L` workers. `None` uses the
    /// available hardware parallelism. Never affects results.
    pub max_threads: Option<usize>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            method: Method::Pelt,
            workers: available_threads(),
            overlap: None,
            penalty: PenaltyRule::default(),
            min_segment_length: 1,
            scale_by_mad: false,
            max_threads: None,
        }
    }
}

impl DetectorConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_overlap(mut self, overlap: usize) -> Self {
        self.overlap = Some(overlap);
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyRule) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.penalty.epsilon = epsilon;
        self
    }

    pub fn with_min_segment_length(mut self, len: usize) -> Self {
        self.min_segment_length = len;
        self
    }

    pub fn with_max_threads(mut self, threads: usize) -> Self {
        self.max_threads = Some(threads);
        self
    }

    pub fn overlap_for(&self, n: usize) -> usize {
        self.overlap.unwrap_or_else(|| default_overlap(n))
    }

    pub fn thread_cap(&self) -> usize {
        self.max_threads.unwrap_or_else(available_threads).max(1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if self.min_segment_length == 0 {
            return Err(Error::config("min_segment_length must be at least 1"));
        }
        if self.min_segment_length > n {
            return Err(Error::config(format!(
                "min_segment_length {} exceeds series length {n}",
                self.min_segment_length
            )));
        }
        PenaltyRule::new(self.penalty.epsilon, self.penalty.dimension)?;
        Ok(())
    }

    /// Non-fatal warnings about settings outside the range where the
    /// consistency guarantees are known to hold.
    pub fn advisories(&self, n: usize) -> Vec<String> {
        let mut notes = Vec::new();
        let log_n = (n.max(2) as f64).ln();
        if self.method == Method::Deal && (self.workers as f64) < log_n.ceil() {
            notes.push(format!(
                "deal with L={} is below ceil(ln n)={}; the guarantee on the number of \
                 split-phase changes assumes L grows at least like (ln n)^(1+a)",
                self.workers,
                log_n.ceil()
            ));
        }
        if self.method == Method::Chunk {
            let v = self.overlap_for(n);
            if v < log_n.ceil() as usize {
                notes.push(format!(
                    "chunk overlap V={v} is below ceil(ln n); boundary changes may be missed"
                ));
            }
        }
        notes
    }
}

pub(crate) fn available_threads() -> usize {
    std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        let uni = PenaltyRule::new(0.0, 1).unwrap();
        assert!((resolve_penalty(uni, 100).unwrap() - 9.210_340_371_976_184).abs() < 1e-12);
        assert!((resolve_penalty(uni, 3).unwrap() - 2.197_224_577_336_219_6).abs() < 1e-12);
        let multi = PenaltyRule::new(0.1, 3).unwrap();
        let beta = resolve_penalty(multi, 1000).unwrap();
        assert!((beta - 4.0 * 1.1 * 1000f64.ln()).abs() < 1e-12);
        assert!((beta - 30.394_123).abs() < 1e-6);
    }

    #[test]
    fn penalty_rejects_short_series() {
        assert!(matches!(
            resolve_penalty(PenaltyRule::default(), 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(PenaltyRule::new(-0.1, 1).is_err());
        assert!(PenaltyRule::new(0.0, 0).is_err());
    }

    #[test]
    fn penalty_increases_in_n_eps_and_dim() {
        let mut prev = 0.0;
        for n in 2..200 {
            let b = resolve_penalty(PenaltyRule::default(), n).unwrap();
            assert!(b > prev && b > 0.0);
            prev = b;
        }
        let lo = resolve_penalty(PenaltyRule::new(0.0, 2).unwrap(), 50).unwrap();
        let hi = resolve_penalty(PenaltyRule::new(0.5, 2).unwrap(), 50).unwrap();
        assert!(hi > lo);
        let d3 = resolve_penalty(PenaltyRule::new(0.0, 3).unwrap(), 50).unwrap();
        assert!(d3 > lo);
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::univariate(vec![1.0]).is_err());
        assert!(TimeSeries::univariate(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let y = TimeSeries::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!((y.len(), y.dim()), (2, 2));
        assert_eq!(y.observation(2), &[3.0, 4.0]);
    }

    #[test]
    fn candidate_set_bounds() {
        assert!(CandidateSet::new(vec![0, 1], 5).is_err());
        assert!(CandidateSet::new(vec![1, 5], 5).is_err());
        assert!(CandidateSet::new(vec![2, 2], 5).is_err());
        assert!(CandidateSet::new(vec![3, 2], 5).is_err());
        let b = CandidateSet::from_unsorted(vec![4, 2, 2, 1], 5).unwrap();
        assert_eq!(b.indices(), &[1, 2, 4]);
        assert_eq!(CandidateSet::full(4).indices(), &[1, 2, 3]);
    }

    #[test]
    fn segments_cover_series() {
        let s = Segmentation {
            n: 10,
            changepoints: vec![3, 7],
            penalised_cost: 0.0,
            beta: 1.0,
        };
        assert_eq!(s.segments(), vec![(1, 3), (4, 7), (8, 10)]);
    }

    #[test]
    fn overlap_default() {
        // (ln 100)^2 = 21.2...
        assert_eq!(default_overlap(100), 22);
        assert_eq!(default_overlap(10_000), 85);
    }

    #[test]
    fn mad_scaling_uses_differences() {
        // differences 1..=9: median 5, absolute deviations median 2
        let mut acc = 0.0;
        let mut vals = vec![0.0];
        for d in 1..=9 {
            acc += d as f64;
            vals.push(acc);
        }
        let y = TimeSeries::univariate(vals).unwrap();
        let scaled = y.scaled_by_mad();
        let sigma = 1.482_602_218_505_602 * 2.0 / std::f64::consts::SQRT_2;
        assert!((scaled.values()[1] - 1.0 / sigma).abs() < 1e-12);
        let constant = TimeSeries::univariate(vec![2.0; 10]).unwrap();
        assert_eq!(constant.scaled_by_mad(), constant);
    }
}
