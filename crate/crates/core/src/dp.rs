// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact penalised-cost segmentation over a restricted candidate set.
//!
//! `F(b)` is the minimal penalised cost of the data up to candidate `b` given
//! a changepoint at `b`:
//!
//! ```text
//! F(start - 1) = 0
//! F(b_s)       = min_t F(b_t) + C(b_t + 1 ..= b_s) + beta
//! F(end)       = min_t F(b_t) + C(b_t + 1 ..= end)
//! ```
//!
//! so the reported cost carries one `beta` per fitted changepoint. PELT
//! pruning drops any `t` with `F(t) + C(t + 1 ..= s) + K > F(s)`; such a `t`
//! can never again be the argmin once `s` is available.

use std::collections::VecDeque;

use crate::cost::{direct_segment_cost, CostFunction, PrefixSums};
use crate::error::{Error, Result};
use crate::types::{CandidateSet, Segmentation, TimeSeries};

/// Largest candidate set [`brute_force_partition`] will enumerate.
pub const BRUTE_FORCE_MAX_CANDIDATES: usize = 20;

const PRUNE_SLACK: f64 = 1e-12;

/// Working state of the recursion over observations `start..=end`.
///
/// Positions index the evaluated points in order; position 0 is the virtual
/// origin `start - 1` with `F = 0`.
#[derive(Debug, Clone)]
pub struct DpState<'c, C: CostFunction> {
    cost: &'c C,
    beta: f64,
    min_len: usize,
    points: Vec<usize>,
    f: Vec<f64>,
    back: Vec<usize>,
    live: Vec<Live>,
    // (release index, positions) pruned by a point not yet usable as a predecessor
    pending: VecDeque<(usize, Vec<usize>)>,
    // f(t) + C(t + 1 ..= s) for each live t at the last evaluation
    scratch: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Live {
    pos: usize,
    index: usize,
    value: f64,
}

impl<'c, C: CostFunction> DpState<'c, C> {
    pub fn new(cost: &'c C, start: usize, beta: f64, min_len: usize) -> Self {
        Self {
            cost,
            beta,
            min_len: min_len.max(1),
            points: vec![start - 1],
            f: vec![0.0],
            back: vec![0],
            live: vec![Live {
                pos: 0,
                index: start - 1,
                value: 0.0,
            }],
            pending: VecDeque::new(),
            scratch: Vec::new(),
        }
    }

    /// Evaluates `F(s)`. The closing point of the range is evaluated with
    /// `closing = true`, which omits `beta`. Returns the new position.
    pub fn evaluate(&mut self, s: usize, closing: bool) -> usize {
        while self
            .pending
            .front()
            .is_some_and(|(release, _)| *release <= s)
        {
            let (_, dropped) = self.pending.pop_front().expect("front checked");
            self.live.retain(|l| dropped.binary_search(&l.pos).is_err());
        }

        let cost = self.cost;
        self.scratch.clear();
        self.scratch.extend(
            self.live
                .iter()
                .map(|l| l.value + cost.cost(l.index + 1, s)),
        );
        let mut best = f64::INFINITY;
        let mut best_pos = 0;
        for (l, &val) in self.live.iter().zip(&self.scratch) {
            if val < best && s - l.index >= self.min_len {
                best = val;
                best_pos = l.pos;
            }
        }
        let value = if closing { best } else { best + self.beta };
        self.points.push(s);
        self.f.push(value);
        self.back.push(best_pos);
        self.f.len() - 1
    }

    /// Prunes every live predecessor dominated by the point at `pos`, which
    /// must be the most recent evaluation. With a minimum segment length
    /// above one, removal waits until that point can itself precede the next
    /// evaluated index. Returns the number of predecessors pruned.
    pub fn prune(&mut self, pos: usize) -> usize {
        debug_assert_eq!(pos, self.f.len() - 1);
        let f_s = self.f[pos];
        if !f_s.is_finite() {
            return 0;
        }
        let bound = f_s + PRUNE_SLACK * (1.0 + f_s.abs()) - self.cost.pruning_constant();
        let before = self.live.len();
        if self.min_len == 1 {
            let mut vals = self.scratch.iter();
            self.live
                .retain(|_| *vals.next().expect("scratch matches live") <= bound);
            before - self.live.len()
        } else {
            let dropped: Vec<usize> = self
                .live
                .iter()
                .zip(&self.scratch)
                .filter(|&(_, &val)| val > bound)
                .map(|(l, _)| l.pos)
                .collect();
            let count = dropped.len();
            if count > 0 {
                self.pending
                    .push_back((self.points[pos] + self.min_len, dropped));
            }
            count
        }
    }

    /// Adds the point at `pos` to the live predecessor set if it is reachable.
    pub fn admit(&mut self, pos: usize) {
        if self.f[pos].is_finite() {
            self.live.push(Live {
                pos,
                index: self.points[pos],
                value: self.f[pos],
            });
        }
    }

    pub fn value(&self, pos: usize) -> f64 {
        self.f[pos]
    }

    pub fn point(&self, pos: usize) -> usize {
        self.points[pos]
    }

    /// Indices (not positions) of the live predecessors, origin included.
    pub fn live_set(&self) -> Vec<usize> {
        self.live.iter().map(|l| l.index).collect()
    }

    /// Changepoints on the optimal path ending at `pos`, ascending.
    pub fn backtrack(&self, mut pos: usize) -> Vec<usize> {
        let mut out = Vec::new();
        pos = self.back[pos];
        while pos != 0 {
            out.push(self.points[pos]);
            pos = self.back[pos];
        }
        out.reverse();
        out
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "penalty must be finite and positive, got {beta}"
        )))
    }
}

/// Minimises the penalised cost of observations `start..=end` with
/// changepoints restricted to `candidates`, each of which must lie in
/// `start..end`. Changepoints and `n` in the result are in the cost's own
/// (global) coordinates; `n` is set to `end`.
pub fn optimal_partition_range<C: CostFunction>(
    cost: &C,
    start: usize,
    end: usize,
    candidates: &[usize],
    beta: f64,
    prune: bool,
    min_len: usize,
) -> Result<Segmentation> {
    check_beta(beta)?;
    if start == 0 || start > end || end > cost.len() {
        return Err(Error::input(format!(
            "range {start}..={end} is not within 1..={}",
            cost.len()
        )));
    }
    let min_len = min_len.max(1);
    if end - start + 1 < min_len {
        return Err(Error::input(format!(
            "range {start}..={end} is shorter than the minimum segment length {min_len}"
        )));
    }
    if let Some(bad) = candidates.iter().find(|&&b| b < start || b >= end) {
        return Err(Error::input(format!(
            "candidate {bad} outside {start}..{end}"
        )));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("candidates must be strictly increasing"));
    }

    let mut state = DpState::new(cost, start, beta, min_len);
    for &b in candidates {
        let pos = state.evaluate(b, false);
        if prune {
            state.prune(pos);
        }
        state.admit(pos);
    }
    let last = state.evaluate(end, true);
    let changepoints = state.backtrack(last);
    let penalised_cost = cost.penalised_cost_in(start, end, &changepoints, beta);
    Ok(Segmentation {
        n: end,
        changepoints,
        penalised_cost,
        beta,
    })
}

/// Exact minimiser of the penalised cost over the whole series with
/// changepoints restricted to `candidates`.
pub fn optimal_partition(
    y: &TimeSeries,
    candidates: &CandidateSet,
    beta: f64,
    prune: bool,
) -> Result<Segmentation> {
    let prefix = PrefixSums::build(y);
    optimal_partition_range(&prefix, 1, y.len(), candidates.indices(), beta, prune, 1)
}

/// Exhaustive minimiser over every subset of `candidates`, with costs from
/// direct summation. Ties (within `1e-12` relative) go to the fewest
/// changepoints, then the lexicographically smallest vector.
pub fn brute_force_partition(
    y: &TimeSeries,
    candidates: &CandidateSet,
    beta: f64,
) -> Result<Segmentation> {
    check_beta(beta)?;
    if candidates.len() > BRUTE_FORCE_MAX_CANDIDATES {
        return Err(Error::input(format!(
            "brute force refuses {} candidates (limit {BRUTE_FORCE_MAX_CANDIDATES})",
            candidates.len()
        )));
    }
    if let Some(&last) = candidates.indices().last() {
        if last >= y.len() {
            return Err(Error::input(format!(
                "candidate {last} outside series of length {}",
                y.len()
            )));
        }
    }
    let n = y.len();
    let b = candidates.indices();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << b.len()) {
        let subset: Vec<usize> = (0..b.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| b[i])
            .collect();
        let mut total = subset.len() as f64 * beta;
        let mut seg_start = 1;
        for &cp in subset.iter().chain(std::iter::once(&n)) {
            total += direct_segment_cost(y, seg_start, cp);
            seg_start = cp + 1;
        }
        let better = match &best {
            None => true,
            Some((cost, cps)) => {
                let tol = 1e-12 * (1.0 + cost.abs());
                if total < cost - tol {
                    true
                } else if total <= cost + tol {
                    (subset.len(), &subset) < (cps.len(), cps)
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((total, subset));
        }
    }
    let (penalised_cost, changepoints) = best.expect("at least the empty subset");
    Ok(Segmentation {
        n,
        changepoints,
        penalised_cost,
        beta,
    })
}
