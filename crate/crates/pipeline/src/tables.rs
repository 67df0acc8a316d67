//! CSV renderings of every analysis result. Floats are written at full
//! (round-trip) precision unless a column is documented otherwise.

use std::io::Write;

use co2_core::data::FEATURES;
use co2_core::importance::ImportanceRow;
use co2_core::pca::PcaBasis;
use co2_core::reporting::CountrySeries;
use co2_core::selection::{CvReport, FoldScores};
use co2_core::stationarity::FeatureStationarity;
use co2_core::svr::{KernelKind, SvrConfig};

use crate::error::{PipelineError, Result};

/// Marker for undefined cells.
pub const NA: &str = "NA";

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| PipelineError::Csv(e.into_error().into()))?;
    Ok(())
}

fn float(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        NA.to_owned()
    }
}

/// `feature,country,statistic,lag,crit_5pct,stationary`; countries whose test
/// failed get `NA` cells.
pub fn write_adf<W: Write>(out: W, results: &[FeatureStationarity]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "country", "statistic", "lag", "crit_5pct", "stationary"])?;
    for f in results {
        for (country, r) in &f.countries {
            match r {
                Ok(r) => w.write_record([
                    f.feature.column,
                    country,
                    &float(r.statistic),
                    &r.chosen_lag.to_string(),
                    &float(r.critical_values.pct5),
                    if r.stationary_at_5pct { "true" } else { "false" },
                ])?,
                Err(_) => w.write_record([f.feature.column, country, NA, NA, NA, NA])?,
            }
        }
    }
    finish(w)
}

/// `feature,stationary_fraction,stationary`, one row per feature.
pub fn write_adf_summary<W: Write>(out: W, results: &[FeatureStationarity]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "stationary_fraction", "stationary"])?;
    for f in results {
        w.write_record([f.feature.column, &float(f.stationary_fraction), &f.stationary.to_string()])?;
    }
    finish(w)
}

fn candidate_cells(cfg: &SvrConfig) -> [String; 4] {
    let degree = if cfg.kernel.kind == KernelKind::Polynomial { cfg.kernel.degree.to_string() } else { NA.to_owned() };
    [cfg.kernel.kind.name().to_owned(), cfg.c.to_string(), cfg.kernel.gamma.name(), degree]
}

/// `kernel,c,gamma,degree,fold,r2,mse`: one row per candidate and fold, then a
/// `mean` row per candidate. A failed candidate gets a single `error` row.
pub fn write_cv<W: Write>(out: W, report: &CvReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kernel", "c", "gamma", "degree", "fold", "r2", "mse"])?;
    for cand in &report.candidates {
        let head = candidate_cells(&cand.config);
        match &cand.scores {
            Ok(s) => {
                for (f, (r2, mse)) in s.fold_r2.iter().zip(&s.fold_mse).enumerate() {
                    w.write_record(head.iter().cloned().chain([f.to_string(), float(*r2), float(*mse)]))?;
                }
                w.write_record(head.iter().cloned().chain(["mean".to_owned(), float(s.mean_r2), float(s.mean_mse)]))?;
            }
            Err(_) => w.write_record(head.iter().cloned().chain(["error".to_owned(), NA.to_owned(), NA.to_owned()]))?,
        }
    }
    finish(w)
}

/// `fold,r2,mse` followed by a `mean` row.
pub fn write_fold_scores<W: Write>(out: W, scores: &FoldScores) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fold", "r2", "mse"])?;
    for (f, (r2, mse)) in scores.fold_r2.iter().zip(&scores.fold_mse).enumerate() {
        w.write_record([f.to_string(), float(*r2), float(*mse)])?;
    }
    w.write_record(["mean".to_owned(), float(scores.mean_r2), float(scores.mean_mse)])?;
    finish(w)
}

/// Features × components, columns `feature,PC1,…,PCk`.
pub fn write_loadings<W: Write>(out: W, basis: &PcaBasis, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["feature".to_owned()];
    header.extend((1..=k).map(|i| format!("PC{i}")));
    w.write_record(&header)?;
    for i in 0..basis.loadings.rows() {
        let name = FEATURES.get(i).map_or_else(|| format!("feature_{i}"), |f| f.name.to_owned());
        w.write_record(std::iter::once(name).chain((0..k).map(|j| float(basis.loadings[(i, j)]))))?;
    }
    finish(w)
}

/// Every explained variance ratio on a single line.
pub fn write_evr<W: Write>(mut out: W, basis: &PcaBasis) -> Result<()> {
    let line: Vec<String> = basis.explained_variance_ratios.iter().map(|v| float(*v)).collect();
    writeln!(out, "{}", line.join(",")).map_err(|e| PipelineError::Csv(e.into()))
}

/// `rank,feature,importance_pct,std_pct`, percentages to four decimals.
pub fn write_importance<W: Write>(out: W, rows: &[ImportanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "feature", "importance_pct", "std_pct"])?;
    for r in rows {
        w.write_record([r.rank.to_string(), r.feature.clone(), r.importance_pct.clone(), r.std_pct.clone()])?;
    }
    finish(w)
}

/// `country,year,actual_kt,predicted_kt,diff_kt,pct_diff`.
pub fn write_report<W: Write>(out: W, series: &[CountrySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "year", "actual_kt", "predicted_kt", "diff_kt", "pct_diff"])?;
    for s in series {
        for i in 0..s.years.len() {
            w.write_record([
                s.country.clone(),
                s.years[i].to_string(),
                float(s.actual[i]),
                float(s.predicted[i]),
                float(s.difference[i]),
                s.pct_difference[i].map_or_else(|| NA.to_owned(), float),
            ])?;
        }
    }
    finish(w)
}

/// One metrics row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model: String,
    pub rows: String,
    pub r2: f64,
    pub mse: f64,
}

/// `model,rows,r2,mse`.
pub fn write_metrics<W: Write>(out: W, metrics: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "rows", "r2", "mse"])?;
    for m in metrics {
        w.write_record([m.model.clone(), m.rows.clone(), float(m.r2), float(m.mse)])?;
    }
    finish(w)
}
