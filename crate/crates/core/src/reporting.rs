//! Actual-vs-predicted analysis per country and a synthetic panel generator.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::data::{Observation, PanelDataset, StandardizationParams, N_FEATURES};
use crate::error::{Error, Result};

/// `|actual|` at or below this many kilotonnes leaves the percentage undefined.
pub const PCT_GUARD_KT: f64 = 1e-9;

/// Emissions of one country over time, in kilotonnes.
///
/// A positive difference means the model underestimates (drawn green), a
/// negative one that it overestimates (drawn brown).
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub country: String,
    pub years: Vec<i32>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    /// `actual − predicted`.
    pub difference: Vec<f64>,
    /// `100 · difference / actual`, `None` for near-zero actual values.
    pub pct_difference: Vec<Option<f64>>,
}

impl CountrySeries {
    pub fn new(country: String, years: Vec<i32>, actual: Vec<f64>, predicted: Vec<f64>) -> Self {
        let difference: Vec<f64> = actual.iter().zip(&predicted).map(|(a, p)| a - p).collect();
        let pct_difference = actual
            .iter()
            .zip(&difference)
            .map(|(a, d)| (a.abs() > PCT_GUARD_KT).then(|| 100.0 * d / a))
            .collect();
        Self { country, years, actual, predicted, difference, pct_difference }
    }
}

/// Groups standardized targets and predictions by country, maps both back to
/// kilotonnes with `params` and sorts each country by year.
pub fn country_report(data: &PanelDataset, predictions: &[f64], params: &StandardizationParams) -> Result<Vec<CountrySeries>> {
    if predictions.len() != data.len() {
        return Err(Error::Dimension(format!("{} predictions for {} rows", predictions.len(), data.len())));
    }
    let rows = data.rows();
    Ok(data
        .country_index()
        .into_iter()
        .map(|(country, idx)| {
            let years = idx.iter().map(|&i| rows[i].year).collect();
            let actual = idx.iter().map(|&i| params.unscale_target(rows[i].target)).collect();
            let predicted = idx.iter().map(|&i| params.unscale_target(predictions[i])).collect();
            CountrySeries::new(String::from(country), years, actual, predicted)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterTable {
    /// `(actual, predicted)` pairs.
    pub points: Vec<(f64, f64)>,
    /// Ends of the `predicted = actual` reference line; absent without points.
    pub diagonal: Option<[(f64, f64); 2]>,
}

pub fn scatter_data(actual: &[f64], predicted: &[f64]) -> Result<ScatterTable> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(format!("{} actual vs {} predicted", actual.len(), predicted.len())));
    }
    let points: Vec<(f64, f64)> = actual.iter().copied().zip(predicted.iter().copied()).collect();
    let diagonal = if points.is_empty() {
        None
    } else {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, p)| (l.min(a.min(*p)), h.max(a.max(*p))));
        Some([(lo, lo), (hi, hi)])
    };
    Ok(ScatterTable { points, diagonal })
}

/// Parameters of the synthetic panel.
///
/// Each feature mixes a per-country size level, a country-level AR(1)
/// business cycle shared by all features, and an idiosyncratic AR(1) term.
/// Features listed in `unit_root_features` replace both time-varying parts
/// with a random walk. The target in kilotonnes is
/// `BASE + SCALE·(s + quadratic·s² + noise_std·ε)` with `s = Σ coefficients[j]·z_j`
/// over the unit-variance latent features `z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_countries: usize,
    pub years: (i32, i32),
    pub seed: u64,
    pub coefficients: [f64; N_FEATURES],
    pub quadratic: f64,
    pub noise_std: f64,
    /// AR(1) coefficient of the time-varying components.
    pub persistence: f64,
    pub unit_root_features: Vec<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_countries: 62,
            years: crate::data::DEFAULT_YEARS,
            seed: 0,
            coefficients: [1.0, 0.45, 0.3, 0.25, 0.12, 0.1, 0.08, 0.06, 0.03, 0.02],
            quadratic: 0.05,
            noise_std: 0.05,
            persistence: 0.3,
            unit_root_features: Vec::new(),
        }
    }
}

// emissions stay positive unless the linear score falls below −10, about five standard deviations
const TARGET_BASE_KT: f64 = 1.0e6;
const TARGET_SCALE_KT: f64 = 1.0e5;

// (size loading, cycle loading) per feature; the rest of the unit variance is idiosyncratic
const LOADINGS: [(f64, f64); N_FEATURES] = [
    (0.85, 0.45),
    (0.80, 0.40),
    (0.85, 0.25),
    (0.80, 0.30),
    (0.70, 0.45),
    (0.55, 0.05),
    (0.75, 0.40),
    (0.80, 0.40),
    (0.60, 0.10),
    (0.65, 0.15),
];

// raw-unit centre of each feature; the spread is 12% of it, keeping values positive
const FEATURE_SPREAD: f64 = 0.12;
const CENTRES: [f64; N_FEATURES] = [4.0e5, 1.0e12, 5.0e7, 3.0e7, 3.0e5, 1.0e6, 6.0e10, 2.0e11, 4.0e7, 4.0e4];

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<PanelDataset> {
    if spec.coefficients.iter().any(|c| !c.is_finite()) || !spec.quadratic.is_finite() {
        return Err(Error::InvalidArgument("synthetic coefficients must be finite".into()));
    }
    if !(spec.noise_std >= 0.0) || !(spec.persistence.abs() < 1.0) {
        return Err(Error::InvalidArgument("noise_std must be >= 0 and |persistence| < 1".into()));
    }
    if let Some(j) = spec.unit_root_features.iter().find(|&&j| j >= N_FEATURES) {
        return Err(Error::InvalidArgument(format!("unit-root feature {j} out of range")));
    }
    let (first, last) = spec.years;
    if first > last {
        return Err(Error::InvalidArgument(format!("empty year range {first}..={last}")));
    }
    let n_years = (last - first + 1) as usize;
    let phi = spec.persistence;
    let innovation = libm::sqrt(1.0 - phi * phi);
    let mut rng = crate::rng(spec.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let ar_path = |normal: &mut dyn FnMut() -> f64| -> Vec<f64> {
        let mut v = normal();
        (0..n_years)
            .map(|t| {
                if t > 0 {
                    v = phi * v + innovation * normal();
                }
                v
            })
            .collect()
    };

    let mut rows = Vec::with_capacity(spec.n_countries * n_years);
    for c in 0..spec.n_countries {
        let country = format!("C{:02}", c + 1);
        let size = normal();
        let cycle = ar_path(&mut normal);
        let mut latent = vec![[0.0; N_FEATURES]; n_years];
        for (j, &(a, b)) in LOADINGS.iter().enumerate() {
            let own = libm::sqrt((1.0 - a * a - b * b).max(0.0));
            if spec.unit_root_features.contains(&j) {
                let mut walk = 0.0;
                for row in latent.iter_mut() {
                    walk += normal();
                    row[j] = a * size + walk;
                }
            } else {
                let idio = ar_path(&mut normal);
                for (t, row) in latent.iter_mut().enumerate() {
                    row[j] = a * size + b * cycle[t] + own * idio[t];
                }
            }
        }
        for (t, z) in latent.iter().enumerate() {
            let s: f64 = z.iter().zip(&spec.coefficients).map(|(v, c)| v * c).sum();
            let eps = normal();
            let target = TARGET_BASE_KT + TARGET_SCALE_KT * (s + spec.quadratic * s * s + spec.noise_std * eps);
            let mut features = [0.0; N_FEATURES];
            for j in 0..N_FEATURES {
                features[j] = CENTRES[j] * (1.0 + FEATURE_SPREAD * z[j]);
            }
            rows.push(Observation { country: country.clone(), year: first + t as i32, features, target });
        }
    }
    PanelDataset::new(rows, spec.years)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fit_standardizer;

    #[test]
    fn difference_signs() {
        let s = CountrySeries::new("X".into(), vec![2000, 2001, 2002], vec![100.0, 100.0, 5.0], vec![90.0, 110.0, 5.0]);
        assert_eq!(s.difference, vec![10.0, -10.0, 0.0]);
        assert_eq!(s.pct_difference, vec![Some(10.0), Some(-10.0), Some(0.0)]);
    }

    #[test]
    fn near_zero_actual_has_no_percentage() {
        let s = CountrySeries::new("X".into(), vec![2000], vec![0.0], vec![3.0]);
        assert_eq!(s.difference, vec![-3.0]);
        assert_eq!(s.pct_difference, vec![None]);
    }

    #[test]
    fn scatter_examples() {
        let t = scatter_data(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.points.len(), 3);
        assert!(t.points.iter().all(|(a, p)| a == p));
        assert_eq!(t.diagonal, Some([(1.0, 1.0), (3.0, 3.0)]));
        let e = scatter_data(&[], &[]).unwrap();
        assert!(e.points.is_empty() && e.diagonal.is_none());
        assert!(scatter_data(&[1.0], &[]).is_err());
    }

    #[test]
    fn default_panel_shape() {
        let d = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(d.len(), 62 * 28);
        assert_eq!(d.countries().len(), 62);
        assert_eq!(d, generate_synthetic(&SyntheticSpec::default()).unwrap());
    }

    #[test]
    fn country_report_sorts_and_unscales() {
        let d = generate_synthetic(&SyntheticSpec { n_countries: 2, years: (2000, 2003), ..Default::default() }).unwrap();
        let p = fit_standardizer(&d).unwrap();
        let z = crate::data::apply_standardizer(&p, &d);
        let report = country_report(&z, &z.targets(), &p).unwrap();
        assert_eq!(report.len(), 2);
        assert_eq!(report[0].years, vec![2000, 2001, 2002, 2003]);
        for (a, raw) in report[0].actual.iter().zip(d.rows()) {
            assert!((a - raw.target).abs() < 1e-9 * raw.target.abs());
        }
        assert!(report.iter().all(|s| s.difference.iter().all(|v| *v == 0.0)));
        assert!(country_report(&z, &[0.0], &p).is_err());
    }

    #[test]
    fn noiseless_single_coefficient_target() {
        let mut coefficients = [0.0; N_FEATURES];
        coefficients[0] = 1.0;
        let spec = SyntheticSpec { noise_std: 0.0, quadratic: 0.0, coefficients, n_countries: 3, ..Default::default() };
        let d = generate_synthetic(&spec).unwrap();
        // target is an exact affine function of feature 0
        for r in d.rows() {
            let z0 = (r.features[0] / CENTRES[0] - 1.0) / FEATURE_SPREAD;
            let expected = TARGET_BASE_KT + TARGET_SCALE_KT * z0;
            assert!((r.target - expected).abs() < 1e-6);
        }
    }
}
