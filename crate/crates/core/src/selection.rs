//! Model selection: k-fold partitions, regression metrics, SVR grid search
//! and cross-validated PCR.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pca::{fit_pcr, predict_pcr};
use crate::svr::{self, GammaMode, KernelConfig, KernelKind, SvrConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled k-fold partition of `0..n`. The first `n % k` folds hold one extra index.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::Length(format!("{n} rows cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::rng(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut in_test = vec![false; n];
        test.iter().for_each(|&i| in_test[i] = true);
        let train = (0..n).filter(|&i| !in_test[i]).collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

fn check_pair(actual: &[f64], predicted: &[f64], min: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(format!("{} actual vs {} predicted", actual.len(), predicted.len())));
    }
    if actual.len() < min {
        return Err(Error::Length(format!("metric needs at least {min} values, got {}", actual.len())));
    }
    Ok(())
}

/// Coefficient of determination `1 − Σ(a − p)² / Σ(a − ā)²`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 2)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("R² of a constant target".into()));
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean squared error, reported positive.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 1)?;
    Ok(actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / actual.len() as f64)
}

/// Per-fold held-out scores. A fold whose R² is undefined (one row or a
/// constant target) records `NaN`, which propagates into `mean_r2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScores {
    pub fold_r2: Vec<f64>,
    pub fold_mse: Vec<f64>,
    pub mean_r2: f64,
    pub mean_mse: f64,
}

impl FoldScores {
    /// Per-fold scores with their arithmetic means.
    pub fn from_folds(fold_r2: Vec<f64>, fold_mse: Vec<f64>) -> Self {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Self { mean_r2: mean(&fold_r2), mean_mse: mean(&fold_mse), fold_r2, fold_mse }
    }
}

fn fold_scores(actual: &[f64], predicted: &[f64]) -> Result<(f64, f64)> {
    let e = mse(actual, predicted)?;
    let r2 = match r_squared(actual, predicted) {
        Ok(r) => r,
        Err(Error::Length(_) | Error::Degenerate(_)) => f64::NAN,
        Err(other) => return Err(other),
    };
    Ok((r2, e))
}

/// Hyperparameter axes. The degree axis only applies to the polynomial kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub kernels: Vec<KernelKind>,
    pub c_values: Vec<f64>,
    pub gamma_modes: Vec<GammaMode>,
    pub degrees: Vec<u32>,
    /// Held fixed across the search.
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            kernels: vec![KernelKind::Linear, KernelKind::Polynomial, KernelKind::Rbf],
            c_values: vec![0.1, 1.0, 10.0, 100.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0],
            gamma_modes: vec![GammaMode::Scale, GammaMode::Auto],
            degrees: vec![2, 3, 4],
            epsilon: svr::DEFAULT_EPSILON,
            tolerance: svr::DEFAULT_TOLERANCE,
        }
    }
}

impl Grid {
    /// A grid holding exactly one configuration.
    pub fn single(cfg: &SvrConfig) -> Self {
        Self {
            kernels: vec![cfg.kernel.kind],
            c_values: vec![cfg.c],
            gamma_modes: vec![cfg.kernel.gamma],
            degrees: vec![cfg.kernel.degree],
            epsilon: cfg.epsilon,
            tolerance: cfg.tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.c_values.is_empty() || self.gamma_modes.is_empty() || self.degrees.is_empty() {
            return Err(Error::InvalidArgument("every grid axis needs at least one value".into()));
        }
        Ok(())
    }

    /// Candidates in search order: kernel, then C, then gamma, then degree.
    pub fn candidates(&self) -> Vec<SvrConfig> {
        let mut out = Vec::new();
        for &kind in &self.kernels {
            for &c in &self.c_values {
                for &gamma in &self.gamma_modes {
                    let degrees: &[u32] = if kind == KernelKind::Polynomial { &self.degrees } else { &self.degrees[..1] };
                    for &degree in degrees {
                        out.push(SvrConfig {
                            c,
                            epsilon: self.epsilon,
                            kernel: KernelConfig { kind, degree, gamma },
                            tolerance: self.tolerance,
                            max_iterations: None,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub config: SvrConfig,
    /// `Err` holds the reason the candidate was excluded.
    pub scores: core::result::Result<FoldScores, String>,
    /// Folds whose solver hit its iteration cap.
    pub unconverged_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub candidates: Vec<CandidateResult>,
    /// Index into `candidates`.
    pub best: usize,
    pub n_folds: usize,
}

impl CvReport {
    pub fn best_config(&self) -> &SvrConfig {
        &self.candidates[self.best].config
    }

    pub fn best_scores(&self) -> &FoldScores {
        self.candidates[self.best].scores.as_ref().expect("best candidate has scores")
    }
}

struct FoldOutcome {
    r2: f64,
    mse: f64,
    converged: bool,
    beta: Vec<f64>,
}

fn evaluate_fold(x: &Matrix, y: &[f64], fold: &Fold, cfg: &SvrConfig, warm: Option<&[f64]>) -> Result<FoldOutcome> {
    let tx = x.select_rows(&fold.train);
    let ty: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
    let model = svr::fit_warm(&tx, &ty, cfg, warm)?;
    let vx = x.select_rows(&fold.test);
    let vy: Vec<f64> = fold.test.iter().map(|&i| y[i]).collect();
    let pred = model.predict(&vx)?;
    let (r2, mse) = fold_scores(&vy, &pred)?;
    let mut beta = vec![0.0; ty.len()];
    for (i, b) in model.support_indices.iter().zip(&model.beta) {
        beta[*i] = *b;
    }
    Ok(FoldOutcome { r2, mse, converged: model.diagnostics.converged, beta })
}

/// Evaluates every C of one kernel setting on one fold, in grid order. Each
/// fit starts from the previous fit's dual solution scaled by the ratio of
/// the two C values: at large C most coefficients sit on the box and grow
/// with it, so the scaled point is far closer to the new optimum than the
/// unscaled one.
fn evaluate_chain(x: &Matrix, y: &[f64], fold: &Fold, configs: &[SvrConfig]) -> Vec<Result<FoldOutcome>> {
    let mut out: Vec<Result<FoldOutcome>> = Vec::with_capacity(configs.len());
    for (pos, cfg) in configs.iter().enumerate() {
        let warm: Option<Vec<f64>> = out.last().and_then(|r| r.as_ref().ok()).map(|o| {
            let ratio = cfg.c / configs[pos - 1].c;
            o.beta.iter().map(|b| b * ratio).collect()
        });
        let r = evaluate_fold(x, y, fold, cfg, warm.as_deref());
        out.push(r);
    }
    out
}

/// Exhaustive k-fold grid search. Folds are drawn once and shared by every
/// candidate. The best candidate maximizes mean R², then minimizes mean MSE,
/// then comes first in search order.
pub fn grid_search_svr(x: &Matrix, y: &[f64], grid: &Grid, k: usize, seed: u64) -> Result<CvReport> {
    grid.validate()?;
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    let folds = kfold_indices(x.rows(), k, seed)?;
    let candidates = grid.candidates();

    // chains share kernel settings and differ only in C
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for (idx, cfg) in candidates.iter().enumerate() {
        match chains.iter_mut().find(|ch| candidates[ch[0]].kernel == cfg.kernel) {
            Some(ch) => ch.push(idx),
            None => chains.push(vec![idx]),
        }
    }
    let jobs: Vec<(usize, usize)> = (0..chains.len()).flat_map(|c| (0..folds.len()).map(move |f| (c, f))).collect();
    let run = |&(c, f): &(usize, usize)| {
        let configs: Vec<SvrConfig> = chains[c].iter().map(|&i| candidates[i]).collect();
        evaluate_chain(x, y, &folds[f], &configs)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Vec<Result<FoldOutcome>>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Vec<Result<FoldOutcome>>> = jobs.iter().map(run).collect();

    let mut per_candidate: Vec<Vec<Option<Result<FoldOutcome>>>> =
        candidates.iter().map(|_| (0..folds.len()).map(|_| None).collect()).collect();
    for ((c, f), chain_results) in jobs.iter().zip(results) {
        for (pos, r) in chain_results.into_iter().enumerate() {
            per_candidate[chains[*c][pos]][*f] = Some(r);
        }
    }

    let mut report = Vec::with_capacity(candidates.len());
    for (cfg, outcomes) in candidates.iter().zip(per_candidate) {
        let mut r2 = Vec::with_capacity(folds.len());
        let mut e = Vec::with_capacity(folds.len());
        let mut unconverged = 0;
        let mut failure = None;
        for (f, o) in outcomes.into_iter().enumerate() {
            match o.expect("every job filled") {
                Ok(o) => {
                    r2.push(o.r2);
                    e.push(o.mse);
                    unconverged += usize::from(!o.converged);
                }
                Err(err) => {
                    failure = Some(format!("fold {f}: {err}"));
                    break;
                }
            }
        }
        let scores = match failure {
            Some(reason) => Err(reason),
            None => Ok(FoldScores::from_folds(r2, e)),
        };
        report.push(CandidateResult { config: *cfg, scores, unconverged_folds: unconverged });
    }

    let mut best: Option<usize> = None;
    for (i, cand) in report.iter().enumerate() {
        let Ok(s) = &cand.scores else { continue };
        if s.mean_r2.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let bs = report[b].scores.as_ref().expect("best has scores");
                s.mean_r2 > bs.mean_r2 || (s.mean_r2 == bs.mean_r2 && s.mean_mse < bs.mean_mse)
            }
        };
        if better {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("no grid candidate produced scores".to_string()))?;
    Ok(CvReport { candidates: report, best, n_folds: folds.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcrCvReport {
    pub k_components: usize,
    pub scores: FoldScores,
    /// Column means of each fold's training rows, as used to center that fold.
    pub fold_column_means: Vec<Vec<f64>>,
}

/// k-fold cross-validation of PCR with PCA refitted inside each training fold.
pub fn cross_validate_pcr(x: &Matrix, y: &[f64], k_components: usize, n_folds: usize, seed: u64) -> Result<PcrCvReport> {
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    if k_components == 0 || k_components > x.cols() {
        return Err(Error::InvalidArgument(format!("{k_components} components for {} features", x.cols())));
    }
    let folds = kfold_indices(x.rows(), n_folds, seed)?;
    let smallest = folds.iter().map(|f| f.train.len()).min().unwrap_or(0);
    if smallest < k_components + 2 {
        return Err(Error::Length(format!(
            "training folds of {smallest} rows are too small for {k_components} components"
        )));
    }
    let mut r2 = Vec::with_capacity(folds.len());
    let mut e = Vec::with_capacity(folds.len());
    let mut means = Vec::with_capacity(folds.len());
    for fold in &folds {
        let tx = x.select_rows(&fold.train);
        let ty: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
        let model = fit_pcr(&tx, &ty, k_components)?;
        let vy: Vec<f64> = fold.test.iter().map(|&i| y[i]).collect();
        let pred = predict_pcr(&model, &x.select_rows(&fold.test))?;
        let (a, b) = fold_scores(&vy, &pred)?;
        r2.push(a);
        e.push(b);
        means.push(model.basis.column_means);
    }
    Ok(PcrCvReport { k_components, scores: FoldScores::from_folds(r2, e), fold_column_means: means })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_into_five() {
        let folds = kfold_indices(10, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.test.len() == 2 && f.train.len() == 8));
    }

    #[test]
    fn eleven_into_five() {
        let sizes: Vec<usize> = kfold_indices(11, 5, 0).unwrap().iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn folds_are_seeded() {
        assert_eq!(kfold_indices(30, 4, 9).unwrap(), kfold_indices(30, 4, 9).unwrap());
        assert_ne!(kfold_indices(30, 4, 9).unwrap(), kfold_indices(30, 4, 10).unwrap());
        assert!(kfold_indices(3, 5, 0).is_err());
        assert!(kfold_indices(3, 1, 0).is_err());
    }

    #[test]
    fn r_squared_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        assert_eq!(r_squared(&a, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&a, &[1.0, 2.0, 4.0]).unwrap(), 0.5);
        assert!(matches!(r_squared(&[4.0, 4.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 5.0], &[1.0, 5.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn default_grid_matches_search_space() {
        let g = Grid::default();
        let c = g.candidates();
        // linear and rbf: 9 C × 2 gamma; poly adds 3 degrees
        assert_eq!(c.len(), 18 + 54 + 18);
        assert_eq!(c[0].kernel.kind, KernelKind::Linear);
        assert_eq!(c.last().unwrap().kernel.kind, KernelKind::Rbf);
    }

    #[test]
    fn single_candidate_grid() {
        let x = Matrix::new(12, 1, (0..12).map(|i| i as f64 / 4.0).collect()).unwrap();
        let y: Vec<f64> = (0..12).map(|i| 0.5 * i as f64 + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let cfg = SvrConfig { c: 10.0, kernel: KernelConfig::linear(), ..SvrConfig::default() };
        let r = grid_search_svr(&x, &y, &Grid::single(&cfg), 3, 1).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.best, 0);
        assert_eq!(r.best_config().c, 10.0);
        let s = r.best_scores();
        assert_eq!(s.fold_r2.len(), 3);
    }

    #[test]
    fn pcr_exact_linear_target() {
        let mut rng = crate::rng(4);
        use rand_distr::{Distribution, StandardNormal};
        let x = Matrix::new(25, 3, (0..75).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap();
        let y: Vec<f64> = (0..25).map(|i| 2.0 * x[(i, 0)] - x[(i, 1)] + 0.5 * x[(i, 2)] + 3.0).collect();
        let r = cross_validate_pcr(&x, &y, 3, 5, 2).unwrap();
        assert!(r.scores.fold_r2.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn pcr_leave_one_out() {
        let x = Matrix::new(10, 2, (0..20).map(|i| ((i * 7) % 11) as f64).collect()).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = cross_validate_pcr(&x, &y, 1, 10, 0).unwrap();
        assert_eq!(r.scores.fold_mse.len(), 10);
        assert!(r.scores.fold_r2.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn pcr_folds_too_small() {
        let x = Matrix::new(6, 3, (0..18).map(|i| ((i * 5) % 7) as f64).collect()).unwrap();
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(cross_validate_pcr(&x, &y, 3, 2, 0), Err(Error::Length(_))));
    }
}
