//! Dense linear algebra for the small systems this crate works with:
//! covariance, symmetric eigendecomposition by cyclic Jacobi rotations and
//! Householder least squares.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    /// The leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * k);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..k]);
        }
        Matrix { rows: self.rows, cols: k, data }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Subtracts `offsets[j]` from every entry of column `j`.
    pub fn centered(&self, offsets: &[f64]) -> Result<Matrix> {
        if offsets.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} offsets for {} columns",
                offsets.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..out.rows {
            for (v, m) in out.row_mut(i).iter_mut().zip(offsets) {
                *v -= m;
            }
        }
        Ok(out)
    }

    fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Column-centering tolerance accepted by [`covariance`].
pub const CENTERING_TOLERANCE: f64 = 1e-8;

/// Sample covariance `XᵀX / (n − 1)` of an already centered matrix.
pub fn covariance(x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Length(format!("covariance needs at least 2 rows, got {n}")));
    }
    let means = x.column_means();
    let scale = x.as_slice().iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut worst: Option<(usize, f64)> = None;
    for (j, m) in means.iter().enumerate() {
        if m.abs() > CENTERING_TOLERANCE * scale && worst.is_none_or(|(_, w)| m.abs() > w.abs()) {
            worst = Some((j, *m));
        }
    }
    if let Some((column, mean)) = worst {
        return Err(Error::NotCentered { column, mean });
    }
    let d = x.cols();
    let mut c = Matrix::zeros(d, d);
    for r in 0..n {
        let row = x.row(r);
        for i in 0..d {
            let a = row[i];
            for j in i..d {
                c[(i, j)] += a * row[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = c[(i, j)] / denom;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm falls below
/// `JACOBI_TOLERANCE` times the Frobenius norm of the input. Each eigenvector
/// is signed so that its largest-magnitude entry is positive, and equal
/// eigenvalues keep the order of their diagonal position.
pub fn eigh(c: &Matrix) -> Result<EigenDecomposition> {
    let n = c.rows();
    if c.cols() != n {
        return Err(Error::Dimension(format!("eigh needs a square matrix, got {}x{}", n, c.cols())));
    }
    let asym = c.max_asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = c.clone();
    let mut v = Matrix::identity(n);
    let total = norm(a.as_slice());
    let threshold = JACOBI_TOLERANCE * total;

    let off_norm = |a: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        libm::sqrt(s)
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { iterations: sweeps, residual: off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let cs = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep diagonal order
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(core::cmp::Ordering::Equal));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        orient(&mut col);
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Flips `v` so that its largest-magnitude entry (first one on near ties) is positive.
pub fn orient(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let lead = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap_or(0);
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Relative pivot size below which a least-squares design is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Ordinary least squares solution computed by Householder QR.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Upper-triangular factor R of A = QR.
    r: Matrix,
}

impl LeastSquares {
    pub fn ssr(&self) -> f64 {
        dot(&self.residuals, &self.residuals)
    }

    /// Diagonal of `(AᵀA)⁻¹ = R⁻¹R⁻ᵀ`.
    pub fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let n = self.r.rows();
        // columns of R⁻¹ via back-substitution on unit vectors
        let mut rinv = Matrix::zeros(n, n);
        for col in 0..n {
            for i in (0..=col).rev() {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in (i + 1)..=col {
                    s -= self.r[(i, k)] * rinv[(k, col)];
                }
                rinv[(i, col)] = s / self.r[(i, i)];
            }
        }
        (0..n).map(|i| dot(rinv.row(i), rinv.row(i))).collect()
    }

    /// Classical OLS standard errors with `σ² = SSR / (m − n)`.
    pub fn standard_errors(&self) -> Vec<f64> {
        let m = self.residuals.len();
        let n = self.coefficients.len();
        let dof = m.saturating_sub(n).max(1) as f64;
        let sigma2 = self.ssr() / dof;
        self.inverse_gram_diagonal()
            .into_iter()
            .map(|d| libm::sqrt(sigma2 * d))
            .collect()
    }
}

/// Minimizes `‖y − Aβ‖₂`, returning the full fit.
pub fn least_squares(a: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::Dimension(format!("{m} design rows but {} targets", y.len())));
    }
    if n == 0 || m < n {
        return Err(Error::Length(format!("least squares needs rows >= cols >= 1, got {m}x{n}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares target".into()));
    }
    let mut r = a.clone();
    let mut qty = y.to_vec();
    let col_norms: Vec<f64> = (0..n).map(|j| norm(&r.column(j))).collect();

    for k in 0..n {
        let mut alpha = 0.0;
        for i in k..m {
            alpha += r[(i, k)] * r[(i, k)];
        }
        let alpha = libm::sqrt(alpha);
        // the remaining part of column k must not vanish relative to the column itself
        if alpha <= RANK_TOLERANCE * col_norms[k] {
            return Err(Error::Singular(format!("column {k} is linearly dependent on earlier columns")));
        }
        let sign = if r[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        for j in k..n {
            let mut s = 0.0;
            for (vi, i) in v.iter().zip(k..m) {
                s += vi * r[(i, j)];
            }
            let f = 2.0 * s / vnorm2;
            for (vi, i) in v.iter().zip(k..m) {
                r[(i, j)] -= f * vi;
            }
        }
        let s: f64 = v.iter().zip(&qty[k..]).map(|(a, b)| a * b).sum();
        let f = 2.0 * s / vnorm2;
        for (vi, q) in v.iter().zip(qty[k..].iter_mut()) {
            *q -= f * vi;
        }
    }

    let mut upper = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            upper[(i, j)] = r[(i, j)];
        }
    }
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qty[i];
        for j in (i + 1)..n {
            s -= upper[(i, j)] * beta[j];
        }
        beta[i] = s / upper[(i, i)];
    }
    let fitted = a.matvec(&beta)?;
    let residuals = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    Ok(LeastSquares { coefficients: beta, residuals, r: upper })
}

/// Least-squares coefficients and residuals.
pub fn lstsq(a: &Matrix, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let fit = least_squares(a, y)?;
    Ok((fit.coefficients, fit.residuals))
}
