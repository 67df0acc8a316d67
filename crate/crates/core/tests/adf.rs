use co2_core::stationarity::{adf_test, critical_values, AdfSpec, LagSelection, MaxLag, RegressionKind};
use rand_distr::{Distribution, StandardNormal};

// deterministic AR(1) with a chaotic-looking bounded driver
fn driven_ar(len: usize, phi: f64) -> Vec<f64> {
    let mut x = vec![0.0];
    for t in 1..len {
        let t = t as f64;
        let e = (1.3 * t * t % 7.0).sin() + 0.5 * (0.37 * t).cos();
        x.push(phi * x.last().unwrap() + e);
    }
    x
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

// reference values from statsmodels.tsa.stattools.adfuller on the same series
#[test]
fn fixed_lag_statistics_match_reference() {
    let cases = [
        (60, 0.5, RegressionKind::Constant, -2.906554380514611, 57),
        (80, 0.3, RegressionKind::ConstantTrend, -3.64286135453161, 77),
        (28, 0.4, RegressionKind::Constant, -1.8317731935878296, 25),
    ];
    for (len, phi, regression, expected, n_obs) in cases {
        let spec = AdfSpec { regression, max_lag: MaxLag::Fixed(2), lag_selection: LagSelection::Fixed };
        let r = adf_test(&driven_ar(len, phi), &spec).unwrap();
        assert_eq!(r.chosen_lag, 2);
        assert_eq!(r.n_obs, n_obs);
        assert!(close(r.statistic, expected, 1e-8), "T={len}: {} vs {expected}", r.statistic);
    }
}

#[test]
fn aic_selection_matches_reference() {
    let r = adf_test(&driven_ar(200, 0.9), &AdfSpec::default()).unwrap();
    assert_eq!(r.max_lag, 14);
    assert_eq!(r.chosen_lag, 2);
    assert_eq!(r.n_obs, 197);
    assert!(close(r.statistic, -3.714289411917689, 1e-8));
    assert!(r.stationary_at_5pct);
}

#[test]
fn finite_sample_critical_values_match_reference() {
    let c = critical_values(RegressionKind::Constant, 197);
    assert!(close(c.pct1, -3.463987334463603, 1e-10));
    assert!(close(c.pct5, -2.8763259091636213, 1e-10));
    assert!(close(c.pct10, -2.5746515171738515, 1e-10));
    let c = critical_values(RegressionKind::ConstantTrend, 79);
    assert!(close(c.pct1, -4.078193339938625, 1e-10));
    assert!(close(c.pct5, -3.467604557671908, 1e-10));
    assert!(close(c.pct10, -3.160453411494831, 1e-10));
}

fn gaussian(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = co2_core::rng(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn discriminates_noise_from_random_walks() {
    let spec = AdfSpec::default();
    let mut noise_hits = 0;
    let mut walk_hits = 0;
    for seed in 0..100 {
        let e = gaussian(seed, 200);
        noise_hits += usize::from(adf_test(&e, &spec).unwrap().stationary_at_5pct);
        let walk: Vec<f64> = e
            .iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect();
        walk_hits += usize::from(!adf_test(&walk, &spec).unwrap().stationary_at_5pct);
    }
    assert!(noise_hits >= 95, "white noise flagged stationary {noise_hits}/100");
    assert!(walk_hits >= 90, "random walk flagged non-stationary {walk_hits}/100");
}
