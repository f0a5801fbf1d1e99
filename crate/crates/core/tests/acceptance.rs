//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured figures (run with `--nocapture` to see them).

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use levyconv::lawlab::{
    analytic_bound_experiment, law_equality_experiment, maximal_ratio_experiment, LawOptions,
    Scenario,
};
use levyconv::prm::{
    compensator, simulate_prm_binomial, simulate_prm_exponential, Construction, MarkSpace,
    PrmRealization,
};
use levyconv::projections::{
    dyadic_project, haar_project, lp_distance, shifted_haar_project, SampledFunction,
};
use levyconv::semigroup::{GeneratorOp, GeneratorSpec};
use levyconv::skorokhod::{d0_symmetrized, PiecewiseConstPath};
use levyconv::stats::{chi_square_poisson_gof, ks_two_sample};
use levyconv::stochint::{
    convolve, step_integral_on, strong_identity_residual, DriftSpec, Integrand, IntegrandSpec,
    StepIntegrand,
};

fn derived_seed(master: u64, k: u64) -> u64 {
    levyconv::rng::stream(master, k).gen()
}

#[test]
fn criterion_01_prm_axioms_chi_square() {
    let start = Instant::now();
    let space = Arc::new(MarkSpace::from_weights(vec![1.2, 0.5, 0.3]).unwrap());
    let boxes: [&[usize]; 3] = [&[0], &[1, 2], &[0, 1, 2]];
    let n = 10_000u64;

    type SimFn = fn(&Arc<MarkSpace>, f64, u64) -> levyconv::Result<PrmRealization>;
    for (cname, simulate) in [
        ("exponential", simulate_prm_exponential as SimFn),
        ("binomial", simulate_prm_binomial as SimFn),
    ] {
        let seed_base = if cname == "exponential" { 1_000_000 } else { 2_000_000 };
        let draws: Vec<PrmRealization> = (0..n)
            .map(|i| simulate(&space, 1.0, seed_base + i).unwrap())
            .collect();
        for (b, subset) in boxes.iter().enumerate() {
            let counts: Vec<u64> = draws
                .iter()
                .map(|eta| eta.count(0.0, 1.0, subset).unwrap())
                .collect();
            let mean = compensator(&space, 0.0, 1.0, subset).unwrap();
            let (stat, dof, p) = chi_square_poisson_gof(&counts, mean, 5.0).unwrap();
            assert!(
                p > 0.001,
                "criterion 1 FAIL: {cname} box {b} chi2 = {stat} (dof {dof}), p = {p}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 1 FAIL: took {elapsed} s");
    println!("criterion 1 (PRM axioms, chi-square at 0.001): PASS in {elapsed:.1} s");
}

#[test]
fn criterion_02_construction_equivalence_ks() {
    let start = Instant::now();
    let space = Arc::new(MarkSpace::from_weights(vec![1.2, 0.8]).unwrap());
    let n = 10_000u64;
    let exp: Vec<PrmRealization> = (0..n)
        .map(|i| simulate_prm_exponential(&space, 1.0, 3_000_000 + i).unwrap())
        .collect();
    let bin: Vec<PrmRealization> = (0..n)
        .map(|i| simulate_prm_binomial(&space, 1.0, 4_000_000 + i).unwrap())
        .collect();
    for t in [0.25, 0.5, 1.0] {
        let a: Vec<f64> = exp
            .iter()
            .map(|e| e.count(0.0, t, &[0, 1]).unwrap() as f64)
            .collect();
        let b: Vec<f64> = bin
            .iter()
            .map(|e| e.count(0.0, t, &[0, 1]).unwrap() as f64)
            .collect();
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        assert!(
            p > 0.001,
            "criterion 2 FAIL: t = {t}, KS = {d}, p = {p}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 2 FAIL: took {elapsed} s");
    println!("criterion 2 (construction equivalence, KS at 0.001): PASS in {elapsed:.1} s");
}

#[test]
fn criterion_03_haar_contraction() {
    let start = Instant::now();
    let mut rng = levyconv::rng::stream(300, 0);
    for _ in 0..1000 {
        let blocks: Vec<Vec<f64>> = (0..256)
            .map(|_| vec![rng.gen::<f64>() * 4.0 - 2.0])
            .collect();
        let f = SampledFunction::from_blocks(8, blocks).unwrap();
        for n in 0..=8 {
            let h = haar_project(n, &f).unwrap();
            for p in [1.5, 2.0] {
                assert!(
                    h.lp_norm(p) <= f.lp_norm(p) + 1e-12,
                    "criterion 3 FAIL: n = {n}, p = {p}"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 3 FAIL: took {elapsed} s");
    println!("criterion 3 (Haar contraction, 1000 step functions): PASS in {elapsed:.1} s");
}

#[test]
fn criterion_04_haar_convergence_halves() {
    let lipschitz: [(&str, fn(f64) -> f64); 4] = [
        ("ramp", |t| t),
        ("sine", |t| (0.5 * std::f64::consts::PI * t).sin()),
        ("quadratic", |t| t * t),
        ("mix", |t| t + 0.3 * (std::f64::consts::PI * t).sin()),
    ];
    for (name, f) in lipschitz {
        let sampled = SampledFunction::from_fn(12, |t| vec![f(t)]).unwrap();
        let mut prev_plain = f64::NAN;
        let mut prev_shifted = f64::NAN;
        for n in 2..=8 {
            let plain = lp_distance(&haar_project(n, &sampled).unwrap(), &sampled, 2.0).unwrap();
            let shifted =
                lp_distance(&shifted_haar_project(n, &sampled).unwrap(), &sampled, 2.0).unwrap();
            if !prev_plain.is_nan() {
                let r = plain / prev_plain;
                assert!(
                    (0.4..=0.6).contains(&r),
                    "criterion 4 FAIL: {name} Haar ratio {r} at n = {n}"
                );
                let rs = shifted / prev_shifted;
                assert!(
                    (0.4..=0.6).contains(&rs),
                    "criterion 4 FAIL: {name} shifted ratio {rs} at n = {n}"
                );
            }
            prev_plain = plain;
            prev_shifted = shifted;
        }
    }
    println!("criterion 4 (Haar and shifted-Haar error halves per order, n = 2..8): PASS");
}

fn dyadic_test_corpus() -> Vec<PiecewiseConstPath> {
    // step paths with jump times on the order-6 dyadic lattice, pairwise
    // gaps >= 2^-2 (so no order >= 2 cell holds two jumps), jump sizes >= 0.5
    let mut corpus = Vec::new();
    let mut rng = levyconv::rng::stream(500, 0);
    while corpus.len() < 20 {
        let target = 3 + (corpus.len() % 2);
        let mut slots: Vec<u32> = (1..64).collect();
        for i in (1..slots.len()).rev() {
            let j = rng.gen_range(0..=i);
            slots.swap(i, j);
        }
        let mut times: Vec<u32> = Vec::new();
        for s in slots {
            if times.iter().all(|t| t.abs_diff(s) >= 16) {
                times.push(s);
                if times.len() == target {
                    break;
                }
            }
        }
        times.sort_unstable();
        let mut value = rng.gen::<f64>() * 2.0 - 1.0;
        let initial = vec![value];
        let jumps = times
            .iter()
            .map(|&k| {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                value += sign * (0.5 + rng.gen::<f64>() * 0.5);
                (k as f64 / 64.0, vec![value])
            })
            .collect();
        corpus.push(PiecewiseConstPath::new(1.0, initial, jumps).unwrap());
    }
    corpus
}

#[test]
fn criterion_05_dyadic_projection_convergence() {
    let corpus = dyadic_test_corpus();
    for (k, x) in corpus.iter().enumerate() {
        let mut prev = f64::INFINITY;
        for n in 2..=8u32 {
            let projected = dyadic_project(n, x).unwrap();
            let bound = d0_symmetrized(x, &projected, n + 3).unwrap();
            assert!(
                bound <= prev + 1e-9,
                "criterion 5 FAIL: path {k} bound rose from {prev} to {bound} at n = {n}"
            );
            prev = bound;
            if n == 8 {
                assert!(
                    bound < 0.05,
                    "criterion 5 FAIL: path {k} bound {bound} at n = 8"
                );
            }
        }
    }
    println!("criterion 5 (dyadic-projection convergence, 20-path corpus): PASS");
}

#[test]
fn criterion_06_zero_generator_reduction() {
    let mut rng = levyconv::rng::stream(600, 0);
    for trial in 0..100u64 {
        let d = rng.gen_range(1..=3);
        let nmarks = rng.gen_range(1..=3);
        let weights: Vec<f64> = (0..nmarks).map(|_| rng.gen::<f64>() + 0.2).collect();
        let space = Arc::new(MarkSpace::from_weights(weights).unwrap());
        let eta = simulate_prm_binomial(&space, 1.0, 11_000 + trial).unwrap();
        let cells = rng.gen_range(1..=3);
        let mut partition = vec![0.0];
        for c in 1..=cells {
            partition.push(c as f64 / cells as f64);
        }
        let values: Vec<Vec<Vec<f64>>> = (0..cells)
            .map(|_| {
                (0..nmarks)
                    .map(|_| (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                    .collect()
            })
            .collect();
        let xi = StepIntegrand::new(partition, values).unwrap();
        let op = GeneratorOp::zero(d).unwrap();
        let conv = convolve(&op, &Integrand::Step(xi.clone()), &eta, 0.125).unwrap();
        let plain = step_integral_on(&xi, &eta, conv.times()).unwrap();
        for t in conv.times() {
            let a = conv.value_at(*t).unwrap();
            let b = plain.value_at(*t).unwrap();
            for (x, y) in a.iter().zip(b) {
                assert!(
                    (x - y).abs() <= 1e-12,
                    "criterion 6 FAIL: trial {trial}, t = {t}: {x} vs {y}"
                );
            }
        }
    }
    println!("criterion 6 (zero-generator reduction, 100 scenarios): PASS");
}

#[test]
fn criterion_07_closed_form_convolution() {
    let space = Arc::new(MarkSpace::from_weights(vec![1.0, 1.0]).unwrap());
    let eta = PrmRealization::new(1.0, vec![(0.3, 0), (0.7, 1)], Arc::clone(&space)).unwrap();
    let op = GeneratorOp::diagonal(vec![1.0]).unwrap();
    let xi = Integrand::Step(StepIntegrand::constant(1.0, 2, vec![1.0]).unwrap());
    let u = convolve(&op, &xi, &eta, 0.01).unwrap();
    let got = u.value_at(1.0).unwrap()[0];
    // frozen before the build: exp(-0.7) + exp(-0.3) - 2 (1 - exp(-1))
    let want = -0.02683759318398793;
    assert!(
        (got - want).abs() <= 1e-5,
        "criterion 7 FAIL: u(1) = {got}, expected {want}"
    );
    println!("criterion 7 (closed-form convolution value): PASS (u(1) = {got:.6})");
}

#[test]
fn criterion_08_strong_identity() {
    let mut rng = levyconv::rng::stream(800, 0);
    for trial in 0..20u64 {
        let d = rng.gen_range(1..=2);
        let mus: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.2 + 0.3).collect();
        let op = GeneratorOp::diagonal(mus).unwrap();
        let weights: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() + 0.3).collect();
        let space = Arc::new(MarkSpace::from_weights(weights).unwrap());
        let eta = simulate_prm_binomial(&space, 1.0, 21_000 + trial).unwrap();
        let value: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 0.5).collect();
        let xi = Integrand::Step(StepIntegrand::constant(1.0, 2, value).unwrap());
        let fine = strong_identity_residual(&op, &xi, &eta, 1e-3).unwrap();
        assert!(
            fine <= 1e-4,
            "criterion 8 FAIL: trial {trial} residual {fine} at dt = 1e-3"
        );
        let coarse = strong_identity_residual(&op, &xi, &eta, 2e-3).unwrap();
        assert!(
            fine <= 0.6 * coarse + 1e-15,
            "criterion 8 FAIL: trial {trial} decay {coarse} -> {fine}"
        );
    }
    println!("criterion 8 (strong identity residual + quadrature order, 20 scenarios): PASS");
}

fn bounds_scenario(samples: usize, seed: u64) -> Scenario {
    Scenario {
        generator: GeneratorSpec::Diagonal {
            mu: vec![0.6, 1.8],
        },
        marks: MarkSpace::from_weights(vec![1.2, 0.8]).unwrap(),
        integrand: IntegrandSpec::JumpCount {
            base: 1.0,
            slope: 0.5,
            cap: None,
            mark_weights: None,
            direction: vec![1.0, 0.4],
        },
        drift: DriftSpec::Zero,
        horizon: 1.0,
        dt: 0.05,
        p: 2.0,
        alpha: 0.4,
        probes: vec![0.5, 1.0],
        samples,
        seed,
        construction: Construction::Exponential,
        d0_reference_grid: None,
    }
}

#[test]
fn criterion_09_maximal_inequality() {
    let start = Instant::now();
    let q = 1.5;
    let small = maximal_ratio_experiment(&bounds_scenario(1_000, 909), q).unwrap();
    let large = maximal_ratio_experiment(&bounds_scenario(10_000, 909), q).unwrap();
    assert!(
        small.ratio.is_finite() && large.ratio.is_finite() && small.ratio > 0.0,
        "criterion 9 FAIL: degenerate ratios"
    );
    let rel = (large.ratio - small.ratio).abs() / large.ratio;
    assert!(
        rel <= 0.2,
        "criterion 9 FAIL: ratio moved {rel:.3} between N = 1e3 and 1e4 ({} vs {})",
        small.ratio,
        large.ratio
    );

    // exact scaling invariance on a fixed seed set
    let base = {
        let mut s = bounds_scenario(1_000, 909);
        s.integrand = IntegrandSpec::Step {
            partition: vec![0.0, 1.0],
            values: vec![vec![vec![1.0, 0.5], vec![0.7, 0.2]]],
        };
        s
    };
    let scaled = {
        let mut s = base.clone();
        s.integrand = IntegrandSpec::Step {
            partition: vec![0.0, 1.0],
            values: vec![vec![vec![3.0, 1.5], vec![2.1, 0.6]]],
        };
        s
    };
    let r1 = maximal_ratio_experiment(&base, q).unwrap();
    let r2 = maximal_ratio_experiment(&scaled, q).unwrap();
    assert!(
        (r1.ratio - r2.ratio).abs() <= 1e-12,
        "criterion 9 FAIL: scaling moved the ratio {} -> {}",
        r1.ratio,
        r2.ratio
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 9 FAIL: took {elapsed} s");
    println!(
        "criterion 9 (maximal inequality: finite, stable, scale-invariant): PASS in {elapsed:.1} s (ratio {:.4})",
        large.ratio
    );
}

#[test]
fn criterion_10_analytic_bound() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for run in 0..5u64 {
        let report =
            analytic_bound_experiment(&bounds_scenario(1_000, derived_seed(1010, run))).unwrap();
        assert!(
            (report.constant - 1.0794).abs() <= 1e-3,
            "criterion 10 FAIL: constant {} != 1.0794",
            report.constant
        );
        assert!(
            report.lhs <= report.rhs,
            "criterion 10 FAIL: run {run}: lhs {} > rhs {}",
            report.lhs,
            report.rhs
        );
        worst = worst.max(report.ratio);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 10 FAIL: took {elapsed} s");
    println!(
        "criterion 10 (analytic bound, C = 1.0794, lhs <= rhs in 5 runs of N = 1e3): PASS in {elapsed:.1} s (worst ratio {worst:.3})"
    );
}

#[test]
fn criterion_11_uniqueness_in_law() {
    let start = Instant::now();
    let reps = 100u64;
    let n_samples = 2000;
    let options = LawOptions {
        force: false,
        n_permutations: 99,
    };

    // calibration: exponential vs binomial constructions of the same law
    let mut rejections = 0u32;
    for rep in 0..reps {
        let a = bounds_scenario(n_samples, derived_seed(111, rep));
        let b = bounds_scenario(n_samples, derived_seed(222, rep))
            .with_construction(Construction::Binomial);
        let report = law_equality_experiment(&a, &b, options).unwrap();
        if report.permutation_p_value < 0.05 {
            rejections += 1;
        }
    }
    let fraction = rejections as f64 / reps as f64;
    assert!(
        (0.01..=0.12).contains(&fraction),
        "criterion 11 FAIL: null rejection fraction {fraction}"
    );

    // negative control: intensity scaled by 1.5 must be detected
    let mut control_rejections = 0u32;
    let forced = LawOptions {
        force: true,
        n_permutations: 99,
    };
    for rep in 0..reps {
        let a = bounds_scenario(n_samples, derived_seed(333, rep));
        let mut b = bounds_scenario(n_samples, derived_seed(444, rep))
            .with_construction(Construction::Binomial);
        b.marks = MarkSpace::from_weights(vec![1.2 * 1.5, 0.8 * 1.5]).unwrap();
        let report = law_equality_experiment(&a, &b, forced).unwrap();
        if report.permutation_p_value <= 0.01 {
            control_rejections += 1;
        }
    }
    let power = control_rejections as f64 / reps as f64;
    assert!(
        power >= 0.9,
        "criterion 11 FAIL: negative control rejected only {power} of runs"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 900.0, "criterion 11 FAIL: took {elapsed} s");
    println!(
        "criterion 11 (uniqueness in law: null fraction {fraction:.2} in [0.01, 0.12], control power {power:.2} >= 0.9): PASS in {elapsed:.0} s"
    );
}
