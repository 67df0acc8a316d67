//! Country-year panel observations, standardization and train/test splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const N_FEATURES: usize = 10;

/// Column header of the emissions target in panel CSV files.
pub const TARGET_COLUMN: &str = "co2_kt";

/// One of the ten socioeconomic predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId {
    pub index: usize,
    pub name: &'static str,
    /// CSV header for the column.
    pub column: &'static str,
    pub unit: &'static str,
}

pub const FEATURES: [FeatureId; N_FEATURES] = [
    FeatureId { index: 0, name: "Total Fossil Fuel Consumption", column: "fossil_fuel_gwh", unit: "GWh" },
    FeatureId { index: 1, name: "GDP", column: "gdp_usd", unit: "US$" },
    FeatureId { index: 2, name: "Population", column: "population", unit: "individuals" },
    FeatureId { index: 3, name: "Urban Population", column: "urban_population", unit: "individuals" },
    FeatureId { index: 4, name: "Electricity Production", column: "electricity_gwh", unit: "GWh" },
    FeatureId { index: 5, name: "Surface Area", column: "surface_area_km2", unit: "km2" },
    FeatureId { index: 6, name: "Construction Value", column: "construction_usd", unit: "US$" },
    FeatureId { index: 7, name: "Manufacturing", column: "manufacturing_usd", unit: "US$" },
    FeatureId { index: 8, name: "Number of Livestock", column: "livestock_heads", unit: "heads" },
    FeatureId { index: 9, name: "Agriculture Gross Production", column: "agriculture_musd", unit: "million US$" },
];

/// Full CSV header: `country,year,<features>,co2_kt`.
pub fn csv_header() -> Vec<&'static str> {
    let mut h = vec!["country", "year"];
    h.extend(FEATURES.iter().map(|f| f.column));
    h.push(TARGET_COLUMN);
    h
}

pub const DEFAULT_YEARS: (i32, i32) = (1992, 2019);

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub country: String,
    pub year: i32,
    pub features: [f64; N_FEATURES],
    /// CO₂ emissions in kilotonnes (or its standardized value).
    pub target: f64,
}

/// Validated country × year panel. Rows keep their insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    rows: Vec<Observation>,
    years: (i32, i32),
}

impl PanelDataset {
    pub fn new(rows: Vec<Observation>, years: (i32, i32)) -> Result<Self> {
        if years.0 > years.1 {
            return Err(Error::InvalidArgument(format!("empty year range {}..={}", years.0, years.1)));
        }
        let mut seen = BTreeSet::new();
        for (i, r) in rows.iter().enumerate() {
            if r.year < years.0 || r.year > years.1 {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: year {} outside {}..={}",
                    r.year, years.0, years.1
                )));
            }
            if let Some(j) = r.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("row {i}, feature {}", FEATURES[j].column)));
            }
            if !r.target.is_finite() {
                return Err(Error::NonFinite(format!("row {i}, {TARGET_COLUMN}")));
            }
            if !seen.insert((r.country.as_str(), r.year)) {
                return Err(Error::Duplicate { country: r.country.clone(), year: r.year });
            }
        }
        Ok(Self { rows, years })
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> (i32, i32) {
        self.years
    }

    pub fn countries(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.country.as_str()).collect()
    }

    pub fn features_matrix(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows.len() * N_FEATURES);
        for r in &self.rows {
            data.extend_from_slice(&r.features);
        }
        // rows were validated finite
        Matrix::new(self.rows.len(), N_FEATURES, data).expect("validated panel")
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    /// Row indices grouped by country, each group sorted by year.
    pub fn country_index(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            groups.entry(r.country.as_str()).or_default().push(i);
        }
        for idx in groups.values_mut() {
            idx.sort_by_key(|&i| self.rows[i].year);
        }
        groups
    }

    /// Sub-panel with the listed rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PanelDataset {
        PanelDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            years: self.years,
        }
    }
}

/// Per-column location and scale for standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub means: [f64; N_FEATURES],
    pub stds: [f64; N_FEATURES],
    pub target_mean: f64,
    pub target_std: f64,
}

/// Column means and sample (n − 1) standard deviations.
pub fn column_mean_std(x: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Length(format!("standardization needs at least 2 rows, got {n}")));
    }
    let means = x.column_means();
    let mut ss = vec![0.0; x.cols()];
    for i in 0..n {
        for ((s, v), m) in ss.iter_mut().zip(x.row(i)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = ss.into_iter().map(|s| libm::sqrt(s / (n - 1) as f64)).collect();
    Ok((means, stds))
}

fn degenerate(std: f64, mean: f64) -> bool {
    !(std > 1e-12 * mean.abs().max(1e-300))
}

/// Fits means and sample standard deviations over every row, regardless of country or year.
pub fn fit_standardizer(data: &PanelDataset) -> Result<StandardizationParams> {
    let (means, stds) = column_mean_std(&data.features_matrix())?;
    for (j, (s, m)) in stds.iter().zip(&means).enumerate() {
        if degenerate(*s, *m) {
            return Err(Error::Degenerate(format!("feature '{}' is constant", FEATURES[j].name)));
        }
    }
    let t = Matrix::column_vector(&data.targets())?;
    let (tm, ts) = column_mean_std(&t)?;
    if degenerate(ts[0], tm[0]) {
        return Err(Error::Degenerate(format!("target '{TARGET_COLUMN}' is constant")));
    }
    let mut out = StandardizationParams {
        means: [0.0; N_FEATURES],
        stds: [0.0; N_FEATURES],
        target_mean: tm[0],
        target_std: ts[0],
    };
    out.means.copy_from_slice(&means);
    out.stds.copy_from_slice(&stds);
    Ok(out)
}

impl StandardizationParams {
    pub fn scale_target(&self, v: f64) -> f64 {
        (v - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, v: f64) -> f64 {
        v * self.target_std + self.target_mean
    }

    fn map(&self, data: &PanelDataset, forward: bool) -> PanelDataset {
        let rows = data
            .rows
            .iter()
            .map(|r| {
                let mut o = r.clone();
                for j in 0..N_FEATURES {
                    o.features[j] = if forward {
                        (r.features[j] - self.means[j]) / self.stds[j]
                    } else {
                        r.features[j] * self.stds[j] + self.means[j]
                    };
                }
                o.target = if forward { self.scale_target(r.target) } else { self.unscale_target(r.target) };
                o
            })
            .collect();
        PanelDataset { rows, years: data.years }
    }
}

/// Maps every value `v` to `(v − mean) / std` using `params`.
pub fn apply_standardizer(params: &StandardizationParams, data: &PanelDataset) -> PanelDataset {
    params.map(data, true)
}

/// Inverse of [`apply_standardizer`].
pub fn invert_standardizer(params: &StandardizationParams, data: &PanelDataset) -> PanelDataset {
    params.map(data, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.2, seed: 0, shuffle: true }
    }
}

/// Number of test rows for `n` rows at `fraction`, rounded to nearest.
pub fn test_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {fraction} outside (0, 1)")));
    }
    let k = libm::round(n as f64 * fraction) as usize;
    if k == 0 || k >= n {
        return Err(Error::Length(format!(
            "test fraction {fraction} on {n} rows leaves an empty side"
        )));
    }
    Ok(k)
}

/// Train/test row indices: the last `test_size` positions of the (optionally shuffled) order.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = test_size(n, spec.test_fraction)?;
    let mut order: Vec<usize> = (0..n).collect();
    if spec.shuffle {
        order.shuffle(&mut crate::rng(spec.seed));
    }
    let test = order.split_off(n - k);
    Ok((order, test))
}

pub fn split(data: &PanelDataset, spec: &SplitSpec) -> Result<(PanelDataset, PanelDataset)> {
    if data.is_empty() {
        return Err(Error::Length("cannot split an empty dataset".into()));
    }
    let (train, test) = split_indices(data.len(), spec)?;
    Ok((data.subset(&train), data.subset(&test)))
}
