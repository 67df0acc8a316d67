//! Augmented Dickey-Fuller unit-root test.
//!
//! The auxiliary regression is
//!
//! ```text
//! Δy_t = α + βt + γ y_{t−1} + δ₁ Δy_{t−1} + … + δ_p Δy_{t−p} + ε_t
//! ```
//!
//! and the test statistic is the t-ratio of γ̂. Critical values come from
//! MacKinnon's (2010) response surfaces evaluated at the effective sample
//! size.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{FeatureId, PanelDataset, FEATURES};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionKind {
    Constant,
    ConstantTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxLag {
    /// Schwert's rule ⌊12·(T/100)^¼⌋, capped so the regression stays estimable.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSelection {
    /// Use exactly the maximum lag.
    Fixed,
    /// Minimize `T·ln(SSR/T) + 2k` over `0..=max_lag` on a common sample.
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdfSpec {
    pub regression: RegressionKind,
    pub max_lag: MaxLag,
    pub lag_selection: LagSelection,
}

impl Default for AdfSpec {
    fn default() -> Self {
        Self { regression: RegressionKind::Constant, max_lag: MaxLag::Auto, lag_selection: LagSelection::Aic }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    pub pct1: f64,
    pub pct5: f64,
    pub pct10: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult {
    pub statistic: f64,
    pub gamma_hat: f64,
    pub chosen_lag: usize,
    pub max_lag: usize,
    /// Observations in the final regression.
    pub n_obs: usize,
    pub critical_values: CriticalValues,
    pub stationary_at_5pct: bool,
}

// MacKinnon (2010) response-surface coefficients, one unit-root regressor:
// crit(T) = b0 + b1/T + b2/T² + b3/T³, rows are 1%, 5%, 10%.
const MACKINNON_CONSTANT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const MACKINNON_TREND: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

/// Critical values of the ADF t-ratio for `n_obs` effective observations.
pub fn critical_values(kind: RegressionKind, n_obs: usize) -> CriticalValues {
    let table = match kind {
        RegressionKind::Constant => &MACKINNON_CONSTANT,
        RegressionKind::ConstantTrend => &MACKINNON_TREND,
    };
    let t = n_obs as f64;
    let eval = |b: &[f64; 4]| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
    CriticalValues { pct1: eval(&table[0]), pct5: eval(&table[1]), pct10: eval(&table[2]) }
}

/// Resolves the maximum lag for a series of `len` points.
pub fn resolve_max_lag(spec: &AdfSpec, len: usize) -> Result<usize> {
    if len < 4 {
        return Err(Error::Length(format!("ADF needs at least 4 observations, got {len}")));
    }
    match spec.max_lag {
        MaxLag::Auto => {
            let n_det = match spec.regression {
                RegressionKind::Constant => 1,
                RegressionKind::ConstantTrend => 2,
            };
            // largest lag whose regression keeps one residual degree of freedom
            let ceiling = len.saturating_sub(3 + n_det) / 2;
            let schwert = libm::floor(12.0 * libm::pow(len as f64 / 100.0, 0.25)) as usize;
            Ok(schwert.min(ceiling))
        }
        MaxLag::Fixed(p) if 2 * p + 2 < len && p + 4 <= len => Ok(p),
        MaxLag::Fixed(p) => Err(Error::Length(format!(
            "max lag {p} too large for a series of {len} observations"
        ))),
    }
}

/// One estimated auxiliary regression.
#[derive(Debug, Clone, PartialEq)]
pub struct AdfRegression {
    pub lag: usize,
    pub n_obs: usize,
    pub n_regressors: usize,
    pub gamma_hat: f64,
    pub gamma_se: f64,
    pub ssr: f64,
}

impl AdfRegression {
    pub fn aic(&self) -> f64 {
        let t = self.n_obs as f64;
        t * libm::log(self.ssr / t) + 2.0 * self.n_regressors as f64
    }

    pub fn statistic(&self) -> f64 {
        self.gamma_hat / self.gamma_se
    }
}

/// Fits the auxiliary regression with `lag` lagged differences, using
/// dependent observations `Δy_t` for `t ≥ start` (requires `start > lag`).
pub fn adf_regression(series: &[f64], kind: RegressionKind, lag: usize, start: usize) -> Result<AdfRegression> {
    if start <= lag || start >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "sample start {start} incompatible with lag {lag} and {} points",
            series.len()
        )));
    }
    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // diff[t-1] = Δy_t
    let n_obs = series.len() - start;
    let n_det = match kind {
        RegressionKind::Constant => 1,
        RegressionKind::ConstantTrend => 2,
    };
    let cols = 1 + lag + n_det;
    if n_obs < cols + 1 {
        return Err(Error::Length(format!("{n_obs} observations for {cols} regressors")));
    }
    let mut design = Vec::with_capacity(n_obs * cols);
    let mut target = Vec::with_capacity(n_obs);
    for t in start..series.len() {
        target.push(diff[t - 1]);
        design.push(series[t - 1]);
        for i in 1..=lag {
            design.push(diff[t - 1 - i]);
        }
        design.push(1.0);
        if kind == RegressionKind::ConstantTrend {
            design.push(t as f64);
        }
    }
    let a = Matrix::new(n_obs, cols, design)?;
    let fit = least_squares(&a, &target)?;
    let se = fit.standard_errors();
    Ok(AdfRegression {
        lag,
        n_obs,
        n_regressors: cols,
        gamma_hat: fit.coefficients[0],
        gamma_se: se[0],
        ssr: fit.ssr(),
    })
}

pub fn adf_test(series: &[f64], spec: &AdfSpec) -> Result<AdfResult> {
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("series value {i}")));
    }
    let max_lag = resolve_max_lag(spec, series.len())?;
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("series is constant".into()));
    }

    let chosen_lag = match spec.lag_selection {
        LagSelection::Fixed => max_lag,
        LagSelection::Aic => {
            let start = max_lag + 1;
            let mut best: Option<(usize, f64)> = None;
            for p in 0..=max_lag {
                let aic = adf_regression(series, spec.regression, p, start)?.aic();
                if best.is_none_or(|(_, b)| aic < b) {
                    best = Some((p, aic));
                }
            }
            best.map_or(0, |(p, _)| p)
        }
    };
    let reg = adf_regression(series, spec.regression, chosen_lag, chosen_lag + 1)?;
    let statistic = reg.statistic();
    if !statistic.is_finite() {
        return Err(Error::Singular("γ̂ standard error vanished".into()));
    }
    let critical_values = critical_values(spec.regression, reg.n_obs);
    Ok(AdfResult {
        statistic,
        gamma_hat: reg.gamma_hat,
        chosen_lag,
        max_lag,
        n_obs: reg.n_obs,
        critical_values,
        stationary_at_5pct: statistic < critical_values.pct5,
    })
}

/// ADF results for one feature across every country in a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStationarity {
    pub feature: FeatureId,
    /// One entry per country in name order; failures are kept rather than aborting.
    pub countries: Vec<(String, Result<AdfResult>)>,
    /// Share of successfully tested countries judged stationary.
    pub stationary_fraction: f64,
    /// Majority verdict: at least half the tested countries are stationary.
    pub stationary: bool,
}

/// Tests each country's series of every feature separately.
pub fn test_all_features(data: &PanelDataset, spec: &AdfSpec) -> Result<Vec<FeatureStationarity>> {
    if data.is_empty() {
        return Err(Error::Length("ADF over an empty panel".into()));
    }
    let groups = data.country_index();
    let rows = data.rows();
    let out = FEATURES
        .iter()
        .map(|feature| {
            let countries: Vec<(String, Result<AdfResult>)> = groups
                .iter()
                .map(|(country, idx)| {
                    let series: Vec<f64> = idx.iter().map(|&i| rows[i].features[feature.index]).collect();
                    (String::from(*country), adf_test(&series, spec))
                })
                .collect();
            let tested = countries.iter().filter(|(_, r)| r.is_ok()).count();
            let stationary = countries
                .iter()
                .filter(|(_, r)| matches!(r, Ok(res) if res.stationary_at_5pct))
                .count();
            let stationary_fraction = if tested == 0 { 0.0 } else { stationary as f64 / tested as f64 };
            FeatureStationarity {
                feature: *feature,
                countries,
                stationary_fraction,
                stationary: tested > 0 && 2 * stationary >= tested,
            }
        })
        .collect();
    Ok(out)
}
