mod common;

use co2_core::svr::{self, GammaMode, KernelConfig, SvrConfig, SvrModel};
use co2_core::Matrix;
use common::oracle;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn dataset(seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = co2_core::rng(seed);
    let n = rng.random_range(5..=20);
    let d = rng.random_range(1..=4);
    let x: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::new(n, d, x).unwrap();
    let y = (0..n)
        .map(|i| {
            let r = x.row(i);
            let e: f64 = StandardNormal.sample(&mut rng);
            r[0] + 0.5 * r[d - 1] * r[d - 1] + 0.3 * e
        })
        .collect();
    (x, y)
}

fn kernels() -> [KernelConfig; 3] {
    [KernelConfig::linear(), KernelConfig::polynomial(2, GammaMode::Scale), KernelConfig::rbf(GammaMode::Auto)]
}

fn dense_beta(model: &SvrModel, n: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n];
    for (i, b) in model.support_indices.iter().zip(&model.beta) {
        beta[*i] = *b;
    }
    beta
}

#[test]
fn tight_fits_match_the_dual_optimum() {
    for seed in 0..50u64 {
        let (x, y) = dataset(seed);
        for (k, kernel) in kernels().into_iter().enumerate() {
            let c = [0.1, 1.0, 10.0][(seed as usize + k) % 3];
            let cfg = SvrConfig { c, kernel, tolerance: 1e-6, ..Default::default() };
            let model = svr::fit(&x, &y, &cfg).unwrap();
            assert!(model.diagnostics.converged);
            let gram = oracle::gram(&kernel, model.gamma, &x);
            let (_, dual_min) = oracle::dual_minimum(&gram, &y, c, cfg.epsilon, 200_000);
            let primal = svr::primal_objective(&model, &x, &y, c, cfg.epsilon).unwrap();
            let rel = (primal + dual_min).abs() / dual_min.abs();
            assert!(rel < 1e-4, "seed {seed} kernel {k}: primal {primal} vs {}", -dual_min);
            let kkt = oracle::kkt_violation(&gram, &y, &dense_beta(&model, y.len()), c, cfg.epsilon);
            assert!(kkt <= 10.0 * cfg.tolerance, "seed {seed} kernel {k}: violation {kkt}");
        }
    }
}

#[test]
fn default_tolerance_reaches_the_dual_optimum() {
    // the dual objective converges much faster than the primal value, whose
    // loss term amplifies any bias error by C
    for seed in 100..120u64 {
        let (x, y) = dataset(seed);
        for kernel in kernels() {
            let cfg = SvrConfig { c: 1.0, kernel, ..Default::default() };
            let model = svr::fit(&x, &y, &cfg).unwrap();
            let gram = oracle::gram(&kernel, model.gamma, &x);
            let (_, dual_min) = oracle::dual_minimum(&gram, &y, cfg.c, cfg.epsilon, 200_000);
            let rel = (model.diagnostics.objective - dual_min).abs() / dual_min.abs();
            assert!(rel < 1e-3, "seed {seed}: {} vs {dual_min}", model.diagnostics.objective);
            assert!(model.diagnostics.max_violation <= cfg.tolerance);
        }
    }
}

#[test]
fn free_support_vectors_sit_on_the_tube() {
    for seed in 200..220u64 {
        let (x, y) = dataset(seed);
        let cfg = SvrConfig { c: 5.0, kernel: KernelConfig::rbf(GammaMode::Scale), tolerance: 1e-8, ..Default::default() };
        let model = svr::fit(&x, &y, &cfg).unwrap();
        let f = model.predict(&x).unwrap();
        let beta = dense_beta(&model, y.len());
        for i in 0..y.len() {
            let r = y[i] - f[i];
            let b = beta[i];
            if b == 0.0 {
                assert!(r.abs() <= cfg.epsilon + 1e-6, "inside-tube point {i} has residual {r}");
            } else if b.abs() < cfg.c {
                assert!((r.abs() - cfg.epsilon).abs() < 1e-6, "free point {i} has residual {r}");
                assert_eq!(r.signum(), b.signum());
            } else {
                assert!(r.abs() >= cfg.epsilon - 1e-6);
            }
        }
    }
}

#[test]
fn dual_feasibility() {
    for seed in 300..330u64 {
        let (x, y) = dataset(seed);
        for kernel in kernels() {
            let cfg = SvrConfig { c: 2.0, kernel, ..Default::default() };
            let model = svr::fit(&x, &y, &cfg).unwrap();
            assert!(model.beta.iter().sum::<f64>().abs() < 1e-9);
            assert!(model.beta.iter().all(|b| b.abs() <= cfg.c && *b != 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prediction_is_linear_in_beta(seed in 0u64..1000, scale in -3.0f64..3.0) {
        let (x, y) = dataset(seed);
        let model = svr::fit(&x, &y, &SvrConfig::default()).unwrap();
        let base = model.predict(&x).unwrap();
        let mut scaled = model.clone();
        scaled.beta.iter_mut().for_each(|b| *b *= scale);
        let with_scale = scaled.predict(&x).unwrap();
        for (p, q) in base.iter().zip(&with_scale) {
            let expected = model.bias + scale * (p - model.bias);
            prop_assert!((q - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn wide_tube_gives_constant_model(seed in 0u64..1000) {
        let (x, y) = dataset(seed);
        let spread = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cfg = SvrConfig { epsilon: 2.0 * spread + 1.0, ..Default::default() };
        let model = svr::fit(&x, &y, &cfg).unwrap();
        prop_assert!(model.beta.is_empty());
        for (yi, fi) in y.iter().zip(model.predict(&x).unwrap()) {
            prop_assert!((yi - fi).abs() <= cfg.epsilon);
        }
    }
}
