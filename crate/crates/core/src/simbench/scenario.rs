// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
    E,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::A,
        ScenarioId::B,
        ScenarioId::C,
        ScenarioId::D,
        ScenarioId::E,
    ];

    /// Number of true changes in the scenario.
    pub fn num_changes(self) -> usize {
        match self {
            ScenarioId::A => 2,
            ScenarioId::B => 3,
            ScenarioId::C => 6,
            ScenarioId::D => 9,
            ScenarioId::E => 14,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ScenarioId::A),
            "B" => Ok(ScenarioId::B),
            "C" => Ok(ScenarioId::C),
            "D" => Ok(ScenarioId::D),
            "E" => Ok(ScenarioId::E),
            other => Err(Error::config(format!(
                "unknown scenario '{other}' (expected A..E)"
            ))),
        }
    }
}

/// Piecewise-constant mean with i.i.d. Gaussian noise.
///
/// Change `i` sits at `floor(theta_i * n)`; segment `k` has mean `mu_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub change_proportions: Vec<f64>,
    pub segment_means: Vec<f64>,
    pub delta_mu: f64,
    pub noise_sd: f64,
}

impl ScenarioSpec {
    /// Evenly spaced changes `theta_i = i / (m + 1)` with means alternating
    /// between `0` and `delta_mu`, unit noise.
    pub fn standard(id: ScenarioId, delta_mu: f64) -> Result<Self> {
        let m = id.num_changes();
        let theta = (1..=m).map(|i| i as f64 / (m + 1) as f64).collect();
        let means = (0..=m)
            .map(|k| if k % 2 == 0 { 0.0 } else { delta_mu })
            .collect();
        Self::new(id, theta, means, 1.0)
    }

    /// Validates proportions and means; `delta_mu` is taken from the means,
    /// which must all differ from their neighbour by the same gap.
    pub fn new(
        id: ScenarioId,
        change_proportions: Vec<f64>,
        segment_means: Vec<f64>,
        noise_sd: f64,
    ) -> Result<Self> {
        let m = id.num_changes();
        if change_proportions.len() != m {
            return Err(Error::config(format!(
                "scenario {id} has {m} changes but {} proportions were given",
                change_proportions.len()
            )));
        }
        if change_proportions.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::config(
                "change proportions must lie strictly inside (0, 1)",
            ));
        }
        if change_proportions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "change proportions must be strictly increasing",
            ));
        }
        if segment_means.len() != m + 1 {
            return Err(Error::config(format!(
                "scenario {id} needs {} segment means, got {}",
                m + 1,
                segment_means.len()
            )));
        }
        if segment_means.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("segment means must be finite"));
        }
        let delta_mu = (segment_means[1] - segment_means[0]).abs();
        if segment_means
            .windows(2)
            .any(|w| ((w[1] - w[0]).abs() - delta_mu).abs() > 1e-9 * (1.0 + delta_mu))
        {
            return Err(Error::config(
                "adjacent segment means must all differ by the same gap",
            ));
        }
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::config(format!(
                "noise sd must be finite and >= 0, got {noise_sd}"
            )));
        }
        Ok(Self {
            id,
            change_proportions,
            segment_means,
            delta_mu,
            noise_sd,
        })
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Result<Self> {
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::config(format!(
                "noise sd must be finite and >= 0, got {noise_sd}"
            )));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    pub fn num_changes(&self) -> usize {
        self.change_proportions.len()
    }

    /// `floor(theta_i * n)` for every change, checked to be distinct and inside `(0, n)`.
    pub fn true_changepoints(&self, n: usize) -> Result<Vec<usize>> {
        let taus: Vec<usize> = self
            .change_proportions
            .iter()
            .map(|&t| (t * n as f64).floor() as usize)
            .collect();
        let mut prev = 0;
        for &tau in &taus {
            if tau <= prev || tau >= n {
                return Err(Error::config(format!(
                    "n = {n} is too short for scenario {}: changepoints {taus:?} collapse",
                    self.id
                )));
            }
            prev = tau;
        }
        Ok(taus)
    }
}

/// Independent random stream `stream` of the generator seeded by `seed`.
///
/// ChaCha is counter based, so replicate `r` always draws the same numbers
/// no matter which replicates ran before it or on which thread.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one series from `spec` using stream 0 of `seed`.
pub fn generate_series(
    spec: &ScenarioSpec,
    n: usize,
    seed: u64,
) -> Result<(TimeSeries, Vec<usize>)> {
    generate_replicate(spec, n, seed, 0)
}

/// Draws replicate `rep` of `spec`; returns the series and its true changepoints.
pub fn generate_replicate(
    spec: &ScenarioSpec,
    n: usize,
    seed: u64,
    rep: u64,
) -> Result<(TimeSeries, Vec<usize>)> {
    if n < 2 {
        return Err(Error::config(format!(
            "series length must be at least 2, got {n}"
        )));
    }
    let taus = spec.true_changepoints(n)?;
    let mut rng = replicate_rng(seed, rep);
    let mut values = Vec::with_capacity(n);
    let mut segment = 0;
    for i in 1..=n {
        if segment < taus.len() && i > taus[segment] {
            segment += 1;
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        values.push(spec.segment_means[segment] + spec.noise_sd * noise);
    }
    Ok((TimeSeries::univariate(values)?, taus))
}
