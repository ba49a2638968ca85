//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use credit_cli::commands::run_all;
use credit_cli::PipelineConfig;
use credit_core::cohort_sim::{
    generate_cohort, SimulationConfig, StudentRecord, REFERENCE_WEIGHTS,
};
use credit_core::credit::credit_score;
use credit_core::regressor::{
    gradient_check, hypothesis, normalize, refit_on_test, solve_normal_equations, split, train,
    Normalization,
};
use credit_core::rng_stats::{mean, sample_poisson, sample_uniform, RngState};
use credit_core::{ModelParams, NormMeta, TrainConfig};
use statrs::distribution::{ContinuousCDF, Normal};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn noiseless() -> SimulationConfig {
    SimulationConfig {
        noise_sd: 0.0,
        ..Default::default()
    }
}

fn max_abs_dev(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_split_fidelity() {
    let cohort = generate_cohort(&SimulationConfig::default()).unwrap();
    let start = Instant::now();
    let s = split(&cohort, &TrainConfig::default()).unwrap();
    let elapsed = start.elapsed();

    // partition check by multiset of rows; cohort rows are distinct with probability 1
    let key = |r: &StudentRecord| format!("{:?}", r);
    let mut counts: BTreeMap<String, i64> = BTreeMap::new();
    for r in &cohort {
        *counts.entry(key(r)).or_default() += 1;
    }
    let distinct = counts.len() == cohort.len();
    for r in s.train.iter().chain(&s.test) {
        *counts.entry(key(r)).or_default() -= 1;
    }
    let exhaustive_disjoint = counts.values().all(|&c| c == 0);
    let pass = s.train.len() == 2400
        && s.test.len() == 600
        && distinct
        && exhaustive_disjoint
        && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "split fidelity",
        pass,
        &format!(
            "train {} / test {}, disjoint+exhaustive {exhaustive_disjoint}, {elapsed:?}",
            s.train.len(),
            s.test.len()
        ),
    );
}

#[test]
fn criterion_2_noiseless_recovery() {
    let cohort = generate_cohort(&noiseless()).unwrap();
    let cfg = TrainConfig::default();
    assert_eq!((cfg.alpha, cfg.iterations), (0.05, 20_000));
    let start = Instant::now();
    let s = split(&cohort, &cfg).unwrap();
    let (params, _) = train(&s, &cfg).unwrap();
    let elapsed = start.elapsed();
    let dev = max_abs_dev(&params.theta, &REFERENCE_WEIGHTS);
    verdict(
        2,
        "noiseless parameter recovery",
        dev < 1e-3 && elapsed < Duration::from_secs(10),
        &format!("max |theta - injected| = {dev:.3e} (tol 1e-3), {elapsed:?}"),
    );
}

#[test]
fn criterion_3_noisy_recovery() {
    let cohort = generate_cohort(&SimulationConfig::default()).unwrap();
    let cfg = TrainConfig::default();
    let start = Instant::now();
    let s = split(&cohort, &cfg).unwrap();
    let (fit_train, _) = train(&s, &cfg).unwrap();
    let (fit_test, _) = refit_on_test(&s, &cfg).unwrap();
    let elapsed = start.elapsed();

    let mut bad = Vec::new();
    for (label, theta) in [("train", fit_train.theta), ("test", fit_test.theta)] {
        for i in 0..6 {
            let d = (theta[i] - REFERENCE_WEIGHTS[i]).abs();
            println!(
                "  {label:<5} theta{i} = {:>9.4}  injected {:.2}  |diff| {d:.4}",
                theta[i], REFERENCE_WEIGHTS[i]
            );
            if d.is_nan() || d > 0.10 {
                bad.push(format!("{label} theta{i} off by {d:.3}"));
            }
        }
    }
    let pass = bad.is_empty() && elapsed < Duration::from_secs(15);
    let detail = if bad.is_empty() {
        format!("all components within 0.10, {elapsed:?}")
    } else {
        format!("{} ({elapsed:?})", bad.join("; "))
    };
    verdict(3, "noisy parameter recovery (+/-0.10)", pass, &detail);
}

#[test]
fn criterion_4_oracle_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 1..=10u64 {
        let cohort = generate_cohort(&SimulationConfig {
            seed,
            ..Default::default()
        })
        .unwrap();
        let cfg = TrainConfig {
            shuffle_seed: seed,
            ..Default::default()
        };
        let s = split(&cohort, &cfg).unwrap();
        let (gd, _) = train(&s, &cfg).unwrap();
        let exact = solve_normal_equations(&s).unwrap();
        worst = worst.max(max_abs_dev(&gd.theta, &exact.theta));
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        "gradient descent vs normal equations",
        worst < 1e-4 && elapsed < Duration::from_secs(30),
        &format!("worst component deviation over 10 seeds = {worst:.3e} (tol 1e-4), {elapsed:?}"),
    );
}

#[test]
fn criterion_5_convergence_shape() {
    let cohort = generate_cohort(&SimulationConfig::default()).unwrap();
    let cfg = TrainConfig::default();
    let s = split(&cohort, &cfg).unwrap();
    let (_, history) = train(&s, &cfg).unwrap();
    let rise = history.max_increase();
    let plateau = history.relative_change_over(100).unwrap();
    verdict(
        5,
        "monotone cost with plateau",
        rise <= 1e-12 && plateau < 1e-8,
        &format!("largest step increase {rise:.3e} (tol 1e-12), final-100 relative change {plateau:.3e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_6_gradient_correctness() {
    let cohort = generate_cohort(&SimulationConfig::default()).unwrap();
    let s = split(&cohort, &TrainConfig::default()).unwrap();
    let y: Vec<f64> = s.train.iter().map(|r| r.performance.unwrap()).collect();
    let (x, _) = normalize(&s.train, Normalization::Fit(Default::default())).unwrap();
    let mut rng = RngState::new(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let theta: [f64; 6] = std::array::from_fn(|i| {
            let u = 2.0 * sample_uniform(&mut rng) - 1.0;
            if i == 0 {
                60.0 + 10.0 * u
            } else {
                3.0 * u
            }
        });
        worst = worst.max(gradient_check(&theta, &x, &y).unwrap());
    }
    verdict(
        6,
        "analytic gradient vs central differences",
        worst <= 1e-5,
        &format!("worst relative error over 10 points = {worst:.3e} (tol 1e-5)"),
    );
}

#[test]
fn criterion_7_distribution_sanity() {
    let cfg = SimulationConfig {
        n_students: 100_000,
        ..Default::default()
    };
    let hw: Vec<f64> = generate_cohort(&cfg)
        .unwrap()
        .iter()
        .map(|r| r.homework)
        .collect();
    let hw_mean = mean(&hw).unwrap();

    let mut st = RngState::new(7);
    let mut draws: Vec<u64> = (0..100_000)
        .map(|_| sample_poisson(&mut st, 100.0).unwrap())
        .collect();
    draws.sort_unstable();
    let normal = Normal::new(100.0, 10.0).unwrap();
    let n = draws.len() as f64;
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < draws.len() {
        let k = draws[i];
        let before = i as f64 / n;
        while i < draws.len() && draws[i] == k {
            i += 1;
        }
        let after = i as f64 / n;
        let next = draws.get(i).copied().unwrap_or(k + 1) as f64;
        let f = normal.cdf(k as f64);
        ks = ks
            .max((f - before).abs())
            .max((f - after).abs())
            .max((normal.cdf(next) - after).abs());
    }
    verdict(
        7,
        "distribution sanity",
        (hw_mean - 70.0).abs() <= 1.0 && ks < 0.03,
        &format!(
            "homework mean {hw_mean:.4} (70 +/- 1), Poisson(100) KS distance {ks:.4} (tol 0.03)"
        ),
    );
}

#[test]
fn criterion_8_credit_score_identity() {
    let mut rng = RngState::new(8);
    let mut u = || sample_uniform(&mut rng);
    let theta: [f64; 6] = std::array::from_fn(|_| 2.0 * u() - 1.0);
    let params = ModelParams {
        theta,
        norm: NormMeta::identity(),
    };
    let mut worst_identity: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    for _ in 0..100 {
        let rec = StudentRecord::new([
            100.0 * u(),
            100.0 * u(),
            100.0 * u(),
            (1 + (u() * 10.0) as u8).min(10) as f64,
            100.0 * u(),
        ])
        .unwrap();
        let x = rec.features();
        let score = credit_score(&params, &rec);
        worst_identity = worst_identity.max((score - hypothesis(&theta, &x)).abs());
        for j in 0..5 {
            let delta = 10.0 * (2.0 * u() - 1.0);
            let mut moved = x;
            moved[j] += delta;
            let diff = hypothesis(&params.theta, &moved) - score;
            worst_affine = worst_affine.max((diff - theta[j + 1] * delta).abs());
        }
    }
    verdict(
        8,
        "credit score identity and affinity",
        worst_identity <= 1e-12 && worst_affine <= 1e-10,
        &format!("max |score - hypothesis| = {worst_identity:.3e} (tol 1e-12), max affine residual {worst_affine:.3e} (tol 1e-10)"),
    );
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::default();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_all(&cfg, &a).unwrap();
    run_all(&cfg, &b).unwrap();
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    let differing: Vec<&String> = ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect();
    let pass = ta.len() >= 9 && ta.keys().eq(tb.keys()) && differing.is_empty();
    verdict(
        9,
        "byte-identical pipeline reruns",
        pass,
        &format!("{} files compared, differing: {differing:?}", ta.len()),
    );
}
