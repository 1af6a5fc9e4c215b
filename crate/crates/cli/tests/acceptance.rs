// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use parcpt_core::simbench::{
    bench, generate_series, replicate_rng, simulate, ScenarioId, ScenarioSpec, SweepConfig,
};
use parcpt_core::{
    brute_force_partition, default_overlap, detect, direct_segment_cost, optimal_partition,
    CandidateSet, CostFunction, DetectorConfig, Method, PrefixSums, TimeSeries,
};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Gaussian noise around a random piecewise-constant mean.
fn random_series(rng: &mut impl Rng, n: usize) -> TimeSeries {
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                level += rng.random_range(-3.0..3.0);
            }
            let e: f64 = StandardNormal.sample(rng);
            level + e
        })
        .collect();
    TimeSeries::univariate(values).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let mut rng = replicate_rng(1, 0);
    for case in 0..500 {
        let n = rng.random_range(2..=12);
        let y = random_series(&mut rng, n);
        let k = rng.random_range(0..=(n - 1).min(10));
        let b: Vec<usize> = sample(&mut rng, n - 1, k)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        let b = CandidateSet::from_unsorted(b, n).unwrap();
        let beta = if case % 2 == 0 {
            0.5
        } else {
            2.0 * (n as f64).ln()
        };
        let oracle = brute_force_partition(&y, &b, beta).unwrap();
        for prune in [true, false] {
            let got = optimal_partition(&y, &b, beta, prune).unwrap();
            if (got.penalised_cost - oracle.penalised_cost).abs() > 1e-9
                || got.changepoints != oracle.changepoints
            {
                return Err(format!(
                    "case {case} (n={n}, beta={beta}, prune={prune}): {:?} cost {} vs oracle {:?} cost {}",
                    got.changepoints, got.penalised_cost, oracle.changepoints, oracle.penalised_cost
                ));
            }
        }
    }
    Ok("500 instances, prune on and off".into())
}

fn degeneracy() -> Verdict {
    let mut rng = replicate_rng(2, 0);
    for case in 0..100 {
        let y = random_series(&mut rng, 500);
        let pelt = detect(&y, &DetectorConfig::new(Method::Pelt)).unwrap();
        let chunk = detect(
            &y,
            &DetectorConfig::new(Method::Chunk)
                .with_workers(1)
                .with_overlap(0),
        )
        .unwrap();
        let deal = detect(&y, &DetectorConfig::new(Method::Deal).with_workers(1)).unwrap();
        if chunk != pelt || deal != pelt {
            return Err(format!(
                "case {case}: pelt {:?}, chunk {:?}, deal {:?}",
                pelt.changepoints, chunk.changepoints, deal.changepoints
            ));
        }
    }
    Ok("100 instances at n=500".into())
}

fn sweep(
    id: ScenarioId,
    n: usize,
    delta: f64,
    methods: &[Method],
    workers: usize,
    reps: usize,
    seed: u64,
) -> SweepConfig {
    let mut cfg = SweepConfig::new(ScenarioSpec::standard(id, delta).unwrap(), n);
    cfg.methods = methods.to_vec();
    cfg.workers = vec![workers];
    cfg.reps = reps;
    cfg.seed = seed;
    cfg.threads = threads();
    cfg
}

fn suboptimality() -> Verdict {
    let n = 10_000;
    let mut notes = Vec::new();
    let mut ok = true;
    for delta in [1.0, 2.0] {
        let cfg = sweep(ScenarioId::C, n, delta, &Method::ALL, 4, 100, 3);
        assert_eq!(
            cfg.detector(Method::Chunk, 4).overlap_for(n),
            default_overlap(n)
        );
        let out = simulate(&cfg).unwrap();
        for method in [Method::Chunk, Method::Deal] {
            let rel: Vec<f64> = out
                .reports
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.relative_cost.expect("relative cost"))
                .collect();
            let min = rel.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = rel.iter().sum::<f64>() / rel.len() as f64;
            let pass = min >= -1e-9 && (delta != 1.0 || mean <= 1.0);
            ok &= pass;
            notes.push(format!("{method} d={delta}: min {min:.3e} mean {mean:.4}"));
        }
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn accuracy() -> Verdict {
    let cfg = sweep(ScenarioId::C, 10_000, 2.0, &Method::ALL, 4, 50, 4);
    let out = simulate(&cfg).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for g in &out.summary.groups {
        let fa = g.false_alarms.mean.unwrap();
        let missed = g.missed.mean.unwrap();
        ok &= g.failures == 0 && fa <= 0.1 && missed <= 0.1;
        notes.push(format!("{} fa {fa:.2} missed {missed:.2}", g.method));
    }
    for (n, workers) in [(100, 2), (1000, 4)] {
        for delta in [1.0, 2.0] {
            let mut cfg = sweep(ScenarioId::C, n, delta, &Method::ALL, workers, 3, 5);
            cfg.scenario = cfg.scenario.with_noise_sd(0.0).unwrap();
            let out = simulate(&cfg).unwrap();
            let exact = out.reports.iter().all(|r| {
                r.error.is_none()
                    && r.false_alarms == Some(0)
                    && r.missed == Some(0)
                    && r.avg_location_error == Some(0.0)
                    && r.relative_cost == Some(0.0)
            });
            if exact {
                notes.push(format!("noiseless n={n} d={delta} exact"));
            } else {
                ok = false;
                let (y, truth) = generate_series(&cfg.scenario, n, 0).unwrap();
                let best = detect(&y, &DetectorConfig::new(Method::Pelt)).unwrap();
                let truth_cost = PrefixSums::build(&y).penalised_cost(&truth, best.beta);
                notes.push(format!(
                    "noiseless n={n} d={delta} not exact: true changepoints cost {truth_cost:.3} > optimum {:.3}",
                    best.penalised_cost
                ));
            }
        }
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn speed_crossover() -> Verdict {
    let hw = threads();
    let mut ok = true;
    let mut notes = vec![format!("{hw} hardware threads")];
    for (n, reps) in [(100_000, 1), (1_000, 20)] {
        let cfg = sweep(
            ScenarioId::C,
            n,
            1.0,
            &[Method::Chunk, Method::Deal],
            4,
            reps,
            6,
        );
        let out = bench(&cfg).unwrap();
        for row in &out.speedup {
            let pass = if n == 1_000 {
                row.mean_speedup < 1.0
            } else {
                row.mean_speedup >= 2.0
            };
            ok &= pass;
            notes.push(format!("n={n} {} {:.2}x", row.method, row.mean_speedup));
        }
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn deal_worker_bound() -> Verdict {
    let n = 10_000;
    let workers = (n as f64).ln().ceil() as usize;
    let cfg = sweep(ScenarioId::C, n, 2.0, &[Method::Deal], workers, 100, 7);
    let out = simulate(&cfg).unwrap();
    let bound = 2 * ScenarioId::C.num_changes();
    let within = out
        .reports
        .iter()
        .filter(|r| r.method == Method::Deal)
        .filter(|r| r.max_worker_changepoints.is_some_and(|m| m <= bound))
        .count();
    let msg = format!("L={workers}: {within}/100 replicates with every worker <= {bound}");
    if within >= 95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(args: &[&str], out: &Path, threads: Option<&str>) -> Vec<(String, Vec<u8>)> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_parcpt"));
    cmd.args(args).arg("--out").arg(out);
    match threads {
        Some(t) => cmd.env("PARCPT_THREADS", t),
        None => cmd.env_remove("PARCPT_THREADS"),
    };
    let status = cmd.output().unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            !p.to_string_lossy().ends_with("_timings.csv")
                && !p.to_string_lossy().ends_with("_speedup.csv")
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let simulate = [
        "simulate",
        "--scenario",
        "B",
        "--n",
        "1000,3000",
        "--delta",
        "1,2",
        "--reps",
        "8",
        "--seed",
        "11",
    ];
    let bench = [
        "bench",
        "--scenario",
        "A",
        "--n",
        "2000",
        "--delta",
        "1",
        "--workers",
        "1,2,4",
        "--reps",
        "3",
        "--seed",
        "12",
    ];
    let mut checked = 0;
    for (name, args) in [("simulate", &simulate[..]), ("bench", &bench[..])] {
        let mut outputs = Vec::new();
        for (i, t) in [None, Some("1"), Some("3"), Some("1")]
            .into_iter()
            .enumerate()
        {
            let out = dir.path().join(format!("{name}-{i}"));
            outputs.push(run_cli(args, &out, t));
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!(
                "{name} outputs differ across runs or PARCPT_THREADS"
            ));
        }
        checked += outputs[0].len();
    }
    Ok(format!(
        "{checked} files byte-identical across 4 runs with PARCPT_THREADS unset/1/3/1 (timing columns excluded)"
    ))
}

fn cost_checks() -> Verdict {
    let mut rng = replicate_rng(8, 0);
    let n = 2_000;
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            5.0 * e + 20.0
        })
        .collect();
    let y = TimeSeries::univariate(values).unwrap();
    let prefix = PrefixSums::build(&y);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s = rng.random_range(1..=n);
        let t = rng.random_range(s..=n);
        let fast = prefix.cost(s, t);
        let slow = direct_segment_cost(&y, s, t);
        if !rel_close(fast, slow, 1e-9) {
            return Err(format!("segment {s}..={t}: prefix {fast} vs direct {slow}"));
        }
        worst = worst.max((fast - slow).abs() / slow.abs().max(1.0));
    }
    for _ in 0..10_000 {
        let s = rng.random_range(1..n);
        let t = rng.random_range(s + 1..=n);
        let u = rng.random_range(s..t);
        let whole = prefix.cost(s, t);
        let parts = prefix.cost(s, u) + prefix.cost(u + 1, t);
        if whole + 1e-9 * whole.max(1.0) < parts {
            return Err(format!(
                "subadditivity fails at ({s}, {u}, {t}): {whole} < {parts}"
            ));
        }
    }
    Ok(format!(
        "10^4 segments (max rel err {worst:.1e}), 10^4 triples"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("degeneracy", degeneracy),
        ("suboptimality", suboptimality),
        ("statistical accuracy", accuracy),
        ("speed crossover", speed_crossover),
        ("deal 2m bound", deal_worker_bound),
        ("determinism", determinism),
        ("cost function", cost_checks),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = check();
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
