//! Principal component analysis and principal component regression.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{covariance, eigh, least_squares, Matrix};
use crate::Predictor;

/// Eigenbasis of the sample covariance of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// `d × d`, column `i` is the loading vector of component `i`.
    pub loadings: Matrix,
    /// Component variances λᵢ, descending.
    pub eigenvalues: Vec<f64>,
    /// λᵢ / Σλ.
    pub explained_variance_ratios: Vec<f64>,
    pub column_means: Vec<f64>,
}

impl PcaBasis {
    pub fn n_components_total(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn cumulative_evr(&self) -> Vec<f64> {
        self.explained_variance_ratios
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

/// Centers the columns of `x`, then eigendecomposes their covariance.
pub fn fit_pca(x: &Matrix) -> Result<PcaBasis> {
    if x.rows() < 2 {
        return Err(Error::Length(format!("PCA needs at least 2 rows, got {}", x.rows())));
    }
    let column_means = x.column_means();
    let centered = x.centered(&column_means)?;
    for j in 0..x.cols() {
        let col = centered.column(j);
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::Degenerate(format!("column {j} is constant")));
        }
    }
    let cov = covariance(&centered)?;
    let eig = eigh(&cov)?;
    let total: f64 = eig.eigenvalues.iter().sum();
    let explained_variance_ratios = eig.eigenvalues.iter().map(|l| l / total).collect();
    Ok(PcaBasis { loadings: eig.eigenvectors, eigenvalues: eig.eigenvalues, explained_variance_ratios, column_means })
}

/// Component scores `Z = (x − μ) V_k` on the first `k` loadings.
pub fn project(basis: &PcaBasis, x: &Matrix, k: usize) -> Result<Matrix> {
    let d = basis.n_components_total();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("{k} components requested out of {d}")));
    }
    if x.cols() != d {
        return Err(Error::Dimension(format!("basis has {d} features, input has {}", x.cols())));
    }
    x.centered(&basis.column_means)?.matmul(&basis.loadings.leading_columns(k))
}

/// Smallest `k` whose cumulative explained variance reaches `target_evr`.
pub fn select_k(explained_variance_ratios: &[f64], target_evr: f64) -> Result<usize> {
    if !(target_evr > 0.0 && target_evr <= 1.0) {
        return Err(Error::InvalidArgument(format!("target EVR {target_evr} outside (0, 1]")));
    }
    let mut acc = 0.0;
    for (i, r) in explained_variance_ratios.iter().enumerate() {
        acc += r;
        if acc >= target_evr - 1e-12 {
            return Ok(i + 1);
        }
    }
    Ok(explained_variance_ratios.len())
}

/// Linear regression of the target on the first `k` component scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PcrModel {
    pub basis: PcaBasis,
    pub k: usize,
    /// One coefficient per retained component.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

pub fn fit_pcr(x: &Matrix, y: &[f64], k: usize) -> Result<PcrModel> {
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    let basis = fit_pca(x)?;
    let z = project(&basis, x, k)?;
    if x.rows() < k + 1 {
        return Err(Error::Length(format!("{} rows cannot fit {k} components and an intercept", x.rows())));
    }
    let mut design = Vec::with_capacity(x.rows() * (k + 1));
    for i in 0..z.rows() {
        design.push(1.0);
        design.extend_from_slice(z.row(i));
    }
    let design = Matrix::new(z.rows(), k + 1, design)?;
    let fit = least_squares(&design, y)?;
    Ok(PcrModel { basis, k, intercept: fit.coefficients[0], coefficients: fit.coefficients[1..].to_vec() })
}

pub fn predict_pcr(model: &PcrModel, x: &Matrix) -> Result<Vec<f64>> {
    let z = project(&model.basis, x, model.k)?;
    let mut out = vec![model.intercept; z.rows()];
    for (i, o) in out.iter_mut().enumerate() {
        *o += z.row(i).iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(out)
}

impl Predictor for PcrModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        predict_pcr(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random(seed: u64, n: usize, d: usize) -> Matrix {
        let mut rng = crate::rng(seed);
        Matrix::new(n, d, (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn points_on_a_line() {
        let x = Matrix::from_rows(&[[-1.0, -1.0], [0.0, 0.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let b = fit_pca(&x).unwrap();
        assert!((b.explained_variance_ratios[0] - 1.0).abs() < 1e-10);
        assert!(b.explained_variance_ratios[1].abs() < 1e-10);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((b.loadings[(0, 0)] - h).abs() < 1e-10);
        assert!((b.loadings[(1, 0)] - h).abs() < 1e-10);
    }

    #[test]
    fn constant_column_rejected() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]]).unwrap();
        assert!(matches!(fit_pca(&x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mean_projects_to_origin() {
        let x = random(1, 30, 4);
        let b = fit_pca(&x).unwrap();
        let mean = Matrix::from_rows(core::slice::from_ref(&b.column_means)).unwrap();
        let z = project(&b, &mean, 4).unwrap();
        assert!(z.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn component_variance_matches_eigenvalue() {
        let x = random(2, 40, 5);
        let b = fit_pca(&x).unwrap();
        let z = project(&b, &x, 5).unwrap();
        for i in 0..5 {
            let col = z.column(i);
            let var = col.iter().map(|v| v * v).sum::<f64>() / 39.0;
            assert!((var - b.eigenvalues[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(&[0.7, 0.2, 0.1], 0.9).unwrap(), 2);
        assert_eq!(select_k(&[0.7, 0.2, 0.1], 1.0).unwrap(), 3);
        assert_eq!(select_k(&[0.68652744, 0.15766246, 0.08149733, 0.04, 0.0343], 0.90).unwrap(), 3);
        assert!(select_k(&[1.0], 0.0).is_err());
    }

    #[test]
    fn project_rejects_bad_k() {
        let x = random(3, 10, 3);
        let b = fit_pca(&x).unwrap();
        assert!(project(&b, &x, 0).is_err());
        assert!(project(&b, &x, 4).is_err());
        assert!(matches!(project(&b, &random(3, 2, 2), 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_coefficient_model_is_constant() {
        let x = random(4, 10, 3);
        let mut m = fit_pcr(&x, &x.column(0), 2).unwrap();
        m.coefficients = vec![0.0, 0.0];
        m.intercept = -1.25;
        assert_eq!(predict_pcr(&m, &x).unwrap(), vec![-1.25; 10]);
    }

    #[test]
    fn coefficients_are_marginal_regressions() {
        let x = random(5, 60, 4);
        let y: Vec<f64> = (0..60).map(|i| x[(i, 0)] - 0.5 * x[(i, 2)] + 0.1 * (i as f64 % 3.0)).collect();
        let m = fit_pcr(&x, &y, 3).unwrap();
        let z = project(&m.basis, &x, 3).unwrap();
        let ym = y.iter().sum::<f64>() / 60.0;
        for i in 0..3 {
            let col = z.column(i);
            let cov: f64 = col.iter().zip(&y).map(|(a, b)| a * (b - ym)).sum();
            let var: f64 = col.iter().map(|a| a * a).sum();
            assert!((m.coefficients[i] - cov / var).abs() < 1e-10);
        }
    }
}
