//! Permutation feature importance.
//!
//! For feature `j` the importance is `I_j = S − (1/L) Σ_l S_j^l`, where `S`
//! is the model's score on the untouched data and `S_j^l` its score after the
//! `l`-th random shuffle of column `j`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::selection::{mse, r_squared};
use crate::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Score {
    RSquared,
    /// Negated mean squared error, so that higher is better.
    NegMse,
}

impl Score {
    pub fn evaluate(self, actual: &[f64], predicted: &[f64]) -> Result<f64> {
        match self {
            Score::RSquared => r_squared(actual, predicted),
            Score::NegMse => mse(actual, predicted).map(|v| -v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportanceConfig {
    pub n_permutations: usize,
    pub seed: u64,
    pub score: Score,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self { n_permutations: 10, seed: 0, score: Score::RSquared }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    /// Column index in the scored matrix.
    pub feature: usize,
    pub importance: f64,
    /// Population standard deviation of the permuted scores.
    pub std: f64,
    /// `S_j^l` for `l = 0..L`.
    pub permuted_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub baseline_score: f64,
    /// Indexed by feature.
    pub per_feature: Vec<FeatureImportance>,
    /// Feature indices by descending importance, ties by index.
    pub ranking: Vec<usize>,
}

/// Scores `model` with each column of `x` shuffled in turn. `x` is left untouched.
pub fn permutation_importance<P: Predictor + ?Sized>(
    model: &P,
    x: &Matrix,
    y: &[f64],
    cfg: &ImportanceConfig,
) -> Result<ImportanceReport> {
    if cfg.n_permutations == 0 {
        return Err(Error::InvalidArgument("at least one permutation is required".into()));
    }
    if x.rows() < 2 {
        return Err(Error::Length(format!("permutation importance needs 2 rows, got {}", x.rows())));
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    let baseline_score = cfg.score.evaluate(y, &model.predict(x)?)?;
    let n_perm = cfg.n_permutations;

    let score_one = |(j, l): (usize, usize)| -> Result<f64> {
        let mut rng = crate::rng(cfg.seed);
        rng.set_stream((j * n_perm + l) as u64);
        let mut column = x.column(j);
        column.shuffle(&mut rng);
        let mut shuffled = x.clone();
        shuffled.set_column(j, &column);
        model
            .predict(&shuffled)
            .and_then(|p| cfg.score.evaluate(y, &p))
            .map_err(|e| context(e, j, l))
    };
    let jobs: Vec<(usize, usize)> = (0..x.cols()).flat_map(|j| (0..n_perm).map(move |l| (j, l))).collect();
    #[cfg(feature = "parallel")]
    let scores: Vec<Result<f64>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(|job| score_one(*job)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<Result<f64>> = jobs.iter().map(|job| score_one(*job)).collect();
    let scores: Vec<f64> = scores.into_iter().collect::<Result<_>>()?;

    let per_feature: Vec<FeatureImportance> = scores
        .chunks(n_perm)
        .enumerate()
        .map(|(feature, s)| {
            // averaging the drops keeps an untouched score at exactly zero
            let drops: Vec<f64> = s.iter().map(|v| baseline_score - v).collect();
            let importance = drops.iter().sum::<f64>() / n_perm as f64;
            let var = drops.iter().map(|d| (d - importance) * (d - importance)).sum::<f64>() / n_perm as f64;
            FeatureImportance { feature, importance, std: libm::sqrt(var), permuted_scores: s.to_vec() }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..per_feature.len()).collect();
    ranking.sort_by(|&a, &b| {
        per_feature[b]
            .importance
            .partial_cmp(&per_feature[a].importance)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(ImportanceReport { baseline_score, per_feature, ranking })
}

fn context(e: Error, j: usize, l: usize) -> Error {
    match e {
        Error::Dimension(m) => Error::Dimension(format!("feature {j}, permutation {l}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("feature {j}, permutation {l}: {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportanceRow {
    /// 1-based.
    pub rank: usize,
    pub feature: String,
    pub importance_pct: String,
    pub std_pct: String,
}

/// Ranked rows with importances rendered as percentages to four decimals.
/// `names[j]` labels feature `j`; missing names fall back to `feature_<j>`.
pub fn to_percentage_table(report: &ImportanceReport, names: &[&str]) -> Vec<ImportanceRow> {
    report
        .ranking
        .iter()
        .enumerate()
        .map(|(pos, &j)| {
            let f = &report.per_feature[j];
            ImportanceRow {
                rank: pos + 1,
                feature: names.get(j).map_or_else(|| format!("feature_{j}"), |n| String::from(*n)),
                importance_pct: format!("{:.4}", 100.0 * f.importance),
                std_pct: format!("{:.4}", 100.0 * f.std),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn data() -> (Matrix, Vec<f64>) {
        let x = Matrix::new(20, 3, (0..60).map(|i| ((i * 37) % 23) as f64).collect()).unwrap();
        let y = x.column(1);
        (x, y)
    }

    #[test]
    fn constant_model_has_zero_importance() {
        let (x, _) = data();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let model = |m: &Matrix| -> Result<Vec<f64>> { Ok(vec![2.5; m.rows()]) };
        let r = permutation_importance(&model, &x, &y, &ImportanceConfig { score: Score::NegMse, ..Default::default() }).unwrap();
        assert!(r.per_feature.iter().all(|f| f.importance == 0.0 && f.std == 0.0));
        assert_eq!(r.ranking, vec![0, 1, 2]);
    }

    #[test]
    fn identity_model_ranks_its_feature_first() {
        let (x, y) = data();
        let model = |m: &Matrix| -> Result<Vec<f64>> { Ok(m.column(1)) };
        let before = x.clone();
        let r = permutation_importance(&model, &x, &y, &ImportanceConfig::default()).unwrap();
        assert_eq!(x, before);
        assert_eq!(r.baseline_score, 1.0);
        assert_eq!(r.ranking[0], 1);
        assert!(r.per_feature[1].importance > 0.5);
        assert_eq!(r.per_feature[0].importance, 0.0);
        for f in &r.per_feature {
            let mean = f.permuted_scores.iter().sum::<f64>() / f.permuted_scores.len() as f64;
            assert!((f.importance - (r.baseline_score - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_are_seeded() {
        let (x, y) = data();
        let model = |m: &Matrix| -> Result<Vec<f64>> { Ok((0..m.rows()).map(|i| m[(i, 1)] + 0.1 * m[(i, 0)]).collect()) };
        let cfg = ImportanceConfig { n_permutations: 5, seed: 42, score: Score::RSquared };
        assert_eq!(
            permutation_importance(&model, &x, &y, &cfg).unwrap(),
            permutation_importance(&model, &x, &y, &cfg).unwrap()
        );
    }

    #[test]
    fn percentage_formatting_and_ties() {
        let report = ImportanceReport {
            baseline_score: 0.99,
            per_feature: vec![
                FeatureImportance { feature: 0, importance: 0.0, std: 0.0, permuted_scores: vec![0.99] },
                FeatureImportance { feature: 1, importance: 0.368243, std: 0.01, permuted_scores: vec![0.621757] },
                FeatureImportance { feature: 2, importance: 0.0, std: 0.0, permuted_scores: vec![0.99] },
            ],
            ranking: vec![1, 0, 2],
        };
        let rows = to_percentage_table(&report, &["a", "Total Fossil Fuel Consumption"]);
        assert_eq!(rows[0].importance_pct, "36.8243");
        assert_eq!(rows[0].feature, "Total Fossil Fuel Consumption");
        assert_eq!((rows[1].rank, rows[1].importance_pct.as_str()), (2, "0.0000"));
        assert_eq!(rows[2].feature, "feature_2");
    }

    #[test]
    fn rejects_zero_permutations() {
        let (x, y) = data();
        let model = |m: &Matrix| -> Result<Vec<f64>> { Ok(m.column(1)) };
        let cfg = ImportanceConfig { n_permutations: 0, ..Default::default() };
        assert!(permutation_importance(&model, &x, &y, &cfg).is_err());
    }
}
