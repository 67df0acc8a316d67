use co2_core::importance::{permutation_importance, ImportanceConfig, Score};
use co2_core::svr::{self, GammaMode, KernelConfig, SvrConfig};
use co2_core::{Matrix, Result};
use rand_distr::{Distribution, StandardNormal};

/// `y = 2·x₀ + small noise`, every other column independent noise.
fn single_signal(seed: u64, n: usize, d: usize) -> (Matrix, Vec<f64>) {
    let mut rng = co2_core::rng(seed);
    let x = Matrix::new(n, d, (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap();
    let y = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            2.0 * x[(i, 0)] + 0.1 * e
        })
        .collect();
    (x, y)
}

#[test]
fn ignored_feature_has_exactly_zero_importance() {
    let (x, y) = single_signal(3, 60, 4);
    let inner = svr::fit(&x.leading_columns(3), &y, &SvrConfig::default()).unwrap();
    // the wrapped model never reads column 3
    let model = move |m: &Matrix| -> Result<Vec<f64>> { inner.predict(&m.leading_columns(3)) };
    for score in [Score::RSquared, Score::NegMse] {
        let r = permutation_importance(&model, &x, &y, &ImportanceConfig { score, ..Default::default() }).unwrap();
        assert_eq!(r.per_feature[3].importance, 0.0);
        assert_eq!(r.per_feature[3].std, 0.0);
    }
}

#[test]
fn dominant_feature_is_recovered() {
    let mut hits = 0;
    for seed in 0..100u64 {
        let (x, y) = single_signal(seed, 80, 5);
        let cfg = SvrConfig { c: 10.0, kernel: KernelConfig::rbf(GammaMode::Scale), ..Default::default() };
        let model = svr::fit(&x, &y, &cfg).unwrap();
        let r = permutation_importance(&model, &x, &y, &ImportanceConfig { seed, ..Default::default() }).unwrap();
        hits += usize::from(r.ranking[0] == 0);
    }
    assert!(hits >= 95, "dominant feature ranked first for {hits}/100 seeds");
}

#[test]
fn stronger_signal_means_larger_importance() {
    let mut rng = co2_core::rng(9);
    let n = 200;
    let x = Matrix::new(n, 3, (0..n * 3).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap();
    let model = |m: &Matrix| -> Result<Vec<f64>> { Ok((0..m.rows()).map(|i| 3.0 * m[(i, 0)] + 1.0 * m[(i, 1)] + 0.2 * m[(i, 2)]).collect()) };
    let y = model(&x).unwrap();
    let r = permutation_importance(&model, &x, &y, &ImportanceConfig::default()).unwrap();
    assert_eq!(r.ranking, vec![0, 1, 2]);
    assert!(r.per_feature.iter().all(|f| f.importance > 0.0));
}
