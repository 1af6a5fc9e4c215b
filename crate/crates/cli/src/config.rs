// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sweep configuration assembled from defaults, an optional `key = value`
//! file and command-line flags (flags win).
//!
//! Config file format: one `key = value` per line, `#` starts a comment,
//! list values are comma separated. Recognised keys:
//!
//! ```text
//! scenario           = C
//! n                  = 1000, 10000
//! delta              = 1, 2
//! reps               = 200
//! seed               = 7
//! methods            = pelt, chunk, deal
//! workers            = 1, 2, 4, 8
//! overlap            = 85
//! epsilon            = 0.05
//! noise_sd           = 1.0
//! min_segment_length = 1
//! theta              = 0.1, 0.3, ...   # change proportions, one per change
//! means              = 0, 1, 0, ...    # segment means; replaces the delta sweep
//! out                = results
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parcpt_core::simbench::{ScenarioId, ScenarioSpec, SweepConfig};
use parcpt_core::{Method, DEFAULT_EPSILON};

use crate::error::{CliError, CliResult};

const KEYS: [&str; 14] = [
    "scenario",
    "n",
    "delta",
    "reps",
    "seed",
    "methods",
    "workers",
    "overlap",
    "epsilon",
    "noise_sd",
    "min_segment_length",
    "theta",
    "means",
    "out",
];

/// Raw `key = value` pairs from a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "config line {}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "config line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn parse_one<T: FromStr>(key: &str, s: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{}'", s.trim())))
}

pub fn parse_list<T: FromStr>(key: &str, s: &str) -> CliResult<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_one(key, p))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: list is empty")));
    }
    Ok(items)
}

pub fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<Method>().map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(CliError::Config("methods: list is empty".into()))
            } else {
                Ok(v)
            }
        })
}

/// Flag values for `simulate` and `bench`; `None` falls back to the config file.
#[derive(Debug, Clone, Default)]
pub struct SweepFlags {
    pub config: Option<PathBuf>,
    pub scenario: Option<String>,
    pub n: Option<String>,
    pub delta: Option<String>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<String>,
    pub workers: Option<String>,
    pub overlap: Option<usize>,
    pub epsilon: Option<f64>,
    pub noise_sd: Option<f64>,
    pub min_segment_length: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fully resolved sweep: one [`SweepConfig`] per (n, delta) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub runs: Vec<SweepConfig>,
    pub out: PathBuf,
}

pub struct Defaults {
    pub methods: Vec<Method>,
    pub workers: Vec<usize>,
    pub reps: usize,
}

impl RunConfig {
    pub fn resolve(flags: &SweepFlags, defaults: Defaults, threads: usize) -> CliResult<Self> {
        let file = match &flags.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        let pick = |flag: &Option<String>, key: &str| -> Option<String> {
            flag.clone().or_else(|| file.get(key).map(str::to_string))
        };
        let required = |v: Option<String>, key: &str| -> CliResult<String> {
            v.ok_or_else(|| {
                CliError::Config(format!("missing --{key} (flag or config key '{key}')"))
            })
        };

        let scenario: ScenarioId = parse_one::<String>(
            "scenario",
            &required(pick(&flags.scenario, "scenario"), "scenario")?,
        )?
        .parse()?;
        let ns: Vec<usize> = parse_list("n", &required(pick(&flags.n, "n"), "n")?)?;
        let means: Option<Vec<f64>> = file
            .get("means")
            .map(|s| parse_list("means", s))
            .transpose()?;
        let deltas: Vec<f64> = match (pick(&flags.delta, "delta"), &means) {
            (Some(d), _) => parse_list("delta", &d)?,
            (None, Some(m)) if m.len() >= 2 => vec![(m[1] - m[0]).abs()],
            (None, _) => {
                return Err(CliError::Config(
                    "missing --delta (flag or config key 'delta')".into(),
                ))
            }
        };
        if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(CliError::Config(
                "delta values must be finite and >= 0".into(),
            ));
        }
        let reps = match flags.reps {
            Some(r) => r,
            None => file
                .get("reps")
                .map(|s| parse_one("reps", s))
                .transpose()?
                .unwrap_or(defaults.reps),
        };
        let seed: u64 = match flags.seed {
            Some(s) => s,
            None => file
                .get("seed")
                .map(|s| parse_one("seed", s))
                .transpose()?
                .unwrap_or(0),
        };
        let methods = match pick(&flags.methods, "methods") {
            Some(s) => parse_methods(&s)?,
            None => defaults.methods,
        };
        let workers = match pick(&flags.workers, "workers") {
            Some(s) => parse_list("workers", &s)?,
            None => defaults.workers,
        };
        let overlap = match flags.overlap {
            Some(v) => Some(v),
            None => file
                .get("overlap")
                .map(|s| parse_one("overlap", s))
                .transpose()?,
        };
        let epsilon = match flags.epsilon {
            Some(v) => v,
            None => file
                .get("epsilon")
                .map(|s| parse_one("epsilon", s))
                .transpose()?
                .unwrap_or(DEFAULT_EPSILON),
        };
        let noise_sd = match flags.noise_sd {
            Some(v) => v,
            None => file
                .get("noise_sd")
                .map(|s| parse_one("noise_sd", s))
                .transpose()?
                .unwrap_or(1.0),
        };
        let min_segment_length = match flags.min_segment_length {
            Some(v) => v,
            None => file
                .get("min_segment_length")
                .map(|s| parse_one("min_segment_length", s))
                .transpose()?
                .unwrap_or(1),
        };
        let theta: Option<Vec<f64>> = file
            .get("theta")
            .map(|s| parse_list("theta", s))
            .transpose()?;
        let out = flags
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));

        let mut runs = Vec::with_capacity(ns.len() * deltas.len());
        for &n in &ns {
            for &delta in &deltas {
                let standard = ScenarioSpec::standard(scenario, delta)?;
                let theta = theta
                    .clone()
                    .unwrap_or_else(|| standard.change_proportions.clone());
                let seg_means = match &means {
                    Some(m) => {
                        let gap = if m.len() >= 2 {
                            (m[1] - m[0]).abs()
                        } else {
                            0.0
                        };
                        if (gap - delta).abs() > 1e-12 * (1.0 + delta) {
                            return Err(CliError::Config(format!(
                                "means have gap {gap} but delta {delta} was requested"
                            )));
                        }
                        m.clone()
                    }
                    None => standard.segment_means.clone(),
                };
                let spec = ScenarioSpec::new(scenario, theta, seg_means, noise_sd)?;
                let mut cfg = SweepConfig::new(spec, n);
                cfg.methods = methods.clone();
                cfg.workers = workers.clone();
                cfg.overlap = overlap;
                cfg.epsilon = epsilon;
                cfg.min_segment_length = min_segment_length;
                cfg.reps = reps;
                cfg.seed = seed;
                cfg.threads = threads;
                cfg.validate()?;
                runs.push(cfg);
            }
        }
        Ok(Self { runs, out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Defaults {
        Defaults {
            methods: Method::ALL.to_vec(),
            workers: vec![4],
            reps: 200,
        }
    }

    #[test]
    fn parses_key_values_with_comments() {
        let kv =
            KeyValues::parse("# header\nscenario = C\n n= 100, 200 # two lengths\n\n").unwrap();
        assert_eq!(kv.get("scenario"), Some("C"));
        assert_eq!(kv.get("n"), Some("100, 200"));
        assert!(KeyValues::parse("bogus = 1").is_err());
        assert!(KeyValues::parse("n 100").is_err());
        assert!(KeyValues::parse("n = 1\nn = 2").is_err());
    }

    #[test]
    fn flags_override_file_and_sweep_expands() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "scenario = A\nn = 300, 600\ndelta = 1, 2\nreps = 3\nseed = 9\n",
        )
        .unwrap();
        let flags = SweepFlags {
            config: Some(path),
            reps: Some(5),
            ..SweepFlags::default()
        };
        let cfg = RunConfig::resolve(&flags, defaults(), 1).unwrap();
        assert_eq!(cfg.runs.len(), 4);
        assert!(cfg.runs.iter().all(|r| r.reps == 5 && r.seed == 9));
        assert_eq!(cfg.runs[1].n, 300);
        assert_eq!(cfg.runs[1].scenario.delta_mu, 2.0);
    }

    #[test]
    fn custom_theta_and_means() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "scenario = A\nn = 100\ntheta = 0.2, 0.7\nmeans = 0, 3, 6\n",
        )
        .unwrap();
        let flags = SweepFlags {
            config: Some(path),
            ..SweepFlags::default()
        };
        let cfg = RunConfig::resolve(&flags, defaults(), 1).unwrap();
        let spec = &cfg.runs[0].scenario;
        assert_eq!(spec.true_changepoints(100).unwrap(), vec![20, 70]);
        assert_eq!(spec.delta_mu, 3.0);
    }

    #[test]
    fn config_errors() {
        let flags = SweepFlags {
            scenario: Some("Z".into()),
            n: Some("100".into()),
            delta: Some("1".into()),
            ..SweepFlags::default()
        };
        let err = RunConfig::resolve(&flags, defaults(), 1).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let flags = SweepFlags {
            scenario: Some("A".into()),
            delta: Some("1".into()),
            ..SweepFlags::default()
        };
        assert_eq!(
            RunConfig::resolve(&flags, defaults(), 1)
                .unwrap_err()
                .exit_code(),
            3
        );
        let flags = SweepFlags {
            scenario: Some("A".into()),
            n: Some("100".into()),
            delta: Some("1".into()),
            methods: Some("pelt,binseg".into()),
            ..SweepFlags::default()
        };
        assert_eq!(
            RunConfig::resolve(&flags, defaults(), 1)
                .unwrap_err()
                .exit_code(),
            3
        );
    }
}
