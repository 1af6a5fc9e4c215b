// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::cost::{CostFunction, PrefixSums};
use crate::error::{Error, Result};
use crate::types::{Segmentation, TimeSeries};

/// Accuracy of one estimate against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub false_alarms: usize,
    pub missed: usize,
    /// Mean distance from each detected true change to its nearest estimate.
    /// `None` when no true change was detected.
    pub avg_location_error: Option<f64>,
    pub max_location_error: Option<usize>,
}

/// Detection tolerance `ceil(ln n)`.
pub fn tolerance(n: usize) -> usize {
    (n.max(1) as f64).ln().ceil() as usize
}

fn nearest_distance(x: usize, sorted: &[usize]) -> Option<usize> {
    let i = sorted.partition_point(|&v| v < x);
    let after = sorted.get(i).map(|&v| v - x);
    let before = i.checked_sub(1).map(|j| x - sorted[j]);
    match (before, after) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Scores `estimated` against `truth` with tolerance `h = ceil(ln n)`.
///
/// An estimate further than `h` from every true change is a false alarm; a
/// true change with no estimate within `h` is missed. Both lists must be
/// strictly increasing.
pub fn score(truth: &[usize], estimated: &[usize], n: usize) -> Score {
    let h = tolerance(n);
    let false_alarms = estimated
        .iter()
        .filter(|&&e| nearest_distance(e, truth).is_none_or(|d| d > h))
        .count();
    let errors: Vec<usize> = truth
        .iter()
        .filter_map(|&t| nearest_distance(t, estimated).filter(|&d| d <= h))
        .collect();
    let missed = truth.len() - errors.len();
    let avg_location_error =
        (!errors.is_empty()).then(|| errors.iter().sum::<usize>() as f64 / errors.len() as f64);
    Score {
        false_alarms,
        missed,
        avg_location_error,
        max_location_error: errors.iter().copied().max(),
    }
}

/// Penalised cost of `estimate` minus that of `baseline`, both recomputed on `y`.
pub fn relative_cost(
    y: &TimeSeries,
    estimate: &Segmentation,
    baseline: &Segmentation,
) -> Result<f64> {
    let n = y.len();
    if estimate.n != n || baseline.n != n {
        return Err(Error::input(format!(
            "segmentations cover n = {} and n = {}, series has n = {n}",
            estimate.n, baseline.n
        )));
    }
    if (estimate.beta - baseline.beta).abs() > 1e-12 * (1.0 + baseline.beta.abs()) {
        return Err(Error::input(format!(
            "segmentations use different penalties ({} vs {})",
            estimate.beta, baseline.beta
        )));
    }
    let prefix = PrefixSums::build(y);
    Ok(relative_cost_with(&prefix, estimate, baseline))
}

pub(crate) fn relative_cost_with(
    prefix: &PrefixSums,
    estimate: &Segmentation,
    baseline: &Segmentation,
) -> f64 {
    let n = prefix.n();
    let est = prefix.penalised_cost_in(1, n, &estimate.changepoints, estimate.beta);
    let base = prefix.penalised_cost_in(1, n, &baseline.changepoints, baseline.beta);
    est - base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::optimal_partition;
    use crate::types::CandidateSet;

    #[test]
    fn exact_hit() {
        let s = score(&[50], &[50], 100);
        assert_eq!(
            s,
            Score {
                false_alarms: 0,
                missed: 0,
                avg_location_error: Some(0.0),
                max_location_error: Some(0),
            }
        );
    }

    #[test]
    fn one_false_alarm_one_near_hit() {
        assert_eq!(tolerance(100), 5);
        let s = score(&[50], &[40, 52], 100);
        assert_eq!(s.false_alarms, 1);
        assert_eq!(s.missed, 0);
        assert_eq!(s.avg_location_error, Some(2.0));
        assert_eq!(s.max_location_error, Some(2));
    }

    #[test]
    fn nothing_estimated() {
        let s = score(&[50], &[], 100);
        assert_eq!((s.false_alarms, s.missed), (0, 1));
        assert_eq!(s.avg_location_error, None);
        assert_eq!(s.max_location_error, None);
    }

    #[test]
    fn boundary_of_tolerance() {
        // h = 5: distance 5 counts as detected, 6 does not
        let s = score(&[50], &[55], 100);
        assert_eq!((s.false_alarms, s.missed), (0, 0));
        let s = score(&[50], &[56], 100);
        assert_eq!((s.false_alarms, s.missed), (1, 1));
        let s = score(&[], &[10], 100);
        assert_eq!(s.false_alarms, 1);
    }

    #[test]
    fn relative_cost_examples() {
        let y = TimeSeries::univariate(
            (0..60)
                .map(|i| if (20..40).contains(&i) { 5.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let beta = 2.0 * 60f64.ln();
        let best = optimal_partition(&y, &CandidateSet::full(60), beta, true).unwrap();
        assert_eq!(best.changepoints, vec![20, 40]);
        assert_eq!(relative_cost(&y, &best, &best).unwrap(), 0.0);
        let mut worse = best.clone();
        worse.changepoints = vec![20];
        assert!(relative_cost(&y, &worse, &best).unwrap() > 0.0);
        let mut other = best.clone();
        other.n = 59;
        assert!(relative_cost(&y, &other, &best).is_err());
    }
}
