// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment costs.
//!
//! The only cost family implemented is the residual sum of squares about the
//! segment mean (Gaussian change in mean with unit variance), summed over
//! dimensions for multivariate data. Evaluation is O(d) per segment after an
//! O(nd) prefix-sum pass.

use crate::error::{Error, Result};
use crate::types::TimeSeries;

/// A segment cost usable by the penalised dynamic program.
///
/// Implementors must be subadditive up to [`CostFunction::pruning_constant`]:
/// `C(s..t) + K >= C(s..u) + C(u+1..t)` for every `s <= u < t`. PELT pruning
/// relies on it.
pub trait CostFunction: Sync {
    /// Number of observations the cost is defined over.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cost of observations `s..=t` (1-based). Callers guarantee `1 <= s <= t <= len`.
    fn cost(&self, s: usize, t: usize) -> f64;

    fn pruning_constant(&self) -> f64 {
        0.0
    }

    /// Penalised cost of a segmentation of observations `start..=end`: the
    /// segment costs plus `beta` for every changepoint.
    fn penalised_cost_in(
        &self,
        start: usize,
        end: usize,
        changepoints: &[usize],
        beta: f64,
    ) -> f64 {
        let mut total = 0.0;
        let mut seg_start = start;
        for &cp in changepoints {
            total += self.cost(seg_start, cp) + beta;
            seg_start = cp + 1;
        }
        total + self.cost(seg_start, end)
    }
}

/// Per-dimension cumulative sums and sums of squares with a leading zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    n: usize,
    dim: usize,
    // row-major (n + 1) x dim
    cum: Vec<f64>,
    cum_sq: Vec<f64>,
}

impl PrefixSums {
    pub fn build(y: &TimeSeries) -> Self {
        let n = y.len();
        let dim = y.dim();
        let mut cum = vec![0.0; (n + 1) * dim];
        let mut cum_sq = vec![0.0; (n + 1) * dim];
        for (i, row) in y.values().chunks_exact(dim).enumerate() {
            for (k, &v) in row.iter().enumerate() {
                cum[(i + 1) * dim + k] = cum[i * dim + k] + v;
                cum_sq[(i + 1) * dim + k] = cum_sq[i * dim + k] + v * v;
            }
        }
        Self {
            n,
            dim,
            cum,
            cum_sq,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cumulative sums of column `k`, length `n + 1`.
    pub fn cum(&self, k: usize) -> Vec<f64> {
        self.cum.iter().skip(k).step_by(self.dim).copied().collect()
    }

    /// Cumulative sums of squares of column `k`, length `n + 1`.
    pub fn cum_sq(&self, k: usize) -> Vec<f64> {
        self.cum_sq
            .iter()
            .skip(k)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    /// Checked residual sum of squares of `y[s..=t]`.
    pub fn segment_cost(&self, s: usize, t: usize) -> Result<f64> {
        if s == 0 || s > t || t > self.n {
            return Err(Error::input(format!(
                "segment {s}..={t} is not within 1..={}",
                self.n
            )));
        }
        Ok(self.cost(s, t))
    }

    pub fn penalised_cost(&self, changepoints: &[usize], beta: f64) -> f64 {
        self.penalised_cost_in(1, self.n, changepoints, beta)
    }
}

impl CostFunction for PrefixSums {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn cost(&self, s: usize, t: usize) -> f64 {
        if s == t {
            return 0.0;
        }
        let len = (t - s + 1) as f64;
        if self.dim == 1 {
            let sum = self.cum[t] - self.cum[s - 1];
            let (sq_hi, sq_lo) = (self.cum_sq[t], self.cum_sq[s - 1]);
            let total = (sq_hi - sq_lo) - sum * sum / len;
            return if total <= 4.0 * f64::EPSILON * (sq_hi + sq_lo) {
                0.0
            } else {
                total
            };
        }
        let (lo, hi) = ((s - 1) * self.dim, t * self.dim);
        let mut total = 0.0;
        let mut scale = 0.0;
        for k in 0..self.dim {
            let sum = self.cum[hi + k] - self.cum[lo + k];
            let sq_hi = self.cum_sq[hi + k];
            let sq_lo = self.cum_sq[lo + k];
            total += (sq_hi - sq_lo) - sum * sum / len;
            scale += sq_hi + sq_lo;
        }
        // rounding in the prefix differences is proportional to the prefix magnitudes
        if total <= 4.0 * f64::EPSILON * scale {
            0.0
        } else {
            total
        }
    }
}

/// Two-pass residual sum of squares of `y[s..=t]` by direct summation.
///
/// O(d(t - s)); used as the independent reference for the prefix-sum route.
pub fn direct_segment_cost(y: &TimeSeries, s: usize, t: usize) -> f64 {
    let dim = y.dim();
    let len = (t - s + 1) as f64;
    let mut total = 0.0;
    for k in 0..dim {
        let mean = (s..=t).map(|i| y.observation(i)[k]).sum::<f64>() / len;
        total += (s..=t)
            .map(|i| {
                let e = y.observation(i)[k] - mean;
                e * e
            })
            .sum::<f64>();
    }
    total
}
