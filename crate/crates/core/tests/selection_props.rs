use co2_core::selection::{grid_search_svr, kfold_indices, mse, r_squared, Grid};
use co2_core::svr::{GammaMode, KernelKind};
use co2_core::Matrix;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn metric_examples_are_exact() {
    let a = [1.0, 2.0, 3.0];
    assert_eq!(r_squared(&a, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    assert_eq!(r_squared(&a, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    assert_eq!(r_squared(&a, &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    assert_eq!(mse(&a, &[1.0, 2.0, 4.0]).unwrap(), 1.0 / 3.0);
    assert_eq!(mse(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
    assert_eq!(mse(&a, &a).unwrap(), 0.0);
    assert!(r_squared(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(mse(&a, &[1.0]).is_err());
}

proptest! {
    #[test]
    fn folds_partition_the_rows(n in 5usize..=200, k in 2usize..=10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_indices(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0u32; n];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            let (lo, hi) = (n / k, n / k + 1);
            prop_assert!(f.test.len() == lo || f.test.len() == hi);
            prop_assert_eq!(f.train.len() + f.test.len(), n);
            prop_assert!(f.train.iter().all(|i| f.test.binary_search(i).is_err()));
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn r_squared_of_mean_prediction_is_zero(values in prop::collection::vec(-1e3f64..1e3, 2..50)) {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assume!(values.iter().any(|v| (v - mean).abs() > 1e-6));
        let r2 = r_squared(&values, &vec![mean; values.len()]).unwrap();
        prop_assert!(r2.abs() < 1e-12);
    }
}

#[test]
fn quadratic_signal_prefers_degree_two() {
    let mut rng = co2_core::rng(5);
    let (n, d) = (160, 3);
    let w = [0.8, -0.5, 0.3];
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::new(n, d, data).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            s * s + 0.05 * e
        })
        .collect();
    let grid = Grid {
        kernels: vec![KernelKind::Linear, KernelKind::Polynomial],
        c_values: vec![0.1, 1.0, 10.0, 100.0],
        gamma_modes: vec![GammaMode::Scale],
        degrees: vec![2],
        ..Default::default()
    };
    let report = grid_search_svr(&x, &y, &grid, 5, 1).unwrap();
    let best_of = |kind: KernelKind| {
        report
            .candidates
            .iter()
            .filter(|c| c.config.kernel.kind == kind)
            .filter_map(|c| c.scores.as_ref().ok().map(|s| s.mean_r2))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (linear, poly) = (best_of(KernelKind::Linear), best_of(KernelKind::Polynomial));
    assert!(poly - linear > 0.05, "poly {poly} vs linear {linear}");
    assert_eq!(report.best_config().kernel.kind, KernelKind::Polynomial);
}

#[test]
fn default_grid_has_ninety_candidates() {
    let g = Grid::default();
    assert_eq!(g.candidates().len(), 90);
    assert_eq!(g.candidates().iter().filter(|c| c.kernel.kind == KernelKind::Polynomial).count(), 54);
}
