//! Brute-force reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use co2_core::svr::{kernel_eval, KernelConfig};
use co2_core::Matrix;

pub fn gram(kernel: &KernelConfig, gamma: f64, x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.rows())
        .map(|i| (0..x.rows()).map(|j| kernel_eval(kernel, gamma, x.row(i), x.row(j)).unwrap()).collect())
        .collect()
}

/// Euclidean projection onto `{a ∈ [0, c]^m : Σ sᵢ aᵢ = 0}` by bisection on the multiplier.
fn project(v: &[f64], s: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(s).map(|(vi, si)| (vi - lambda * si).clamp(0.0, c)).collect() };
    let sum = |lambda: f64| -> f64 { v.iter().zip(s).map(|(vi, si)| si * (vi - lambda * si).clamp(0.0, c)).sum() };
    // Σ sᵢ aᵢ(λ) is non-increasing in λ and constant outside [min − c, max + c]
    let spread = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-spread, spread);
    while hi - lo > 1e-15 * spread {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn largest_eigenvalue(k: &[Vec<f64>]) -> f64 {
    let n = k.len();
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Minimum of the ε-SVR dual `½ aᵀQa + pᵀa` over the feasible set, found by
/// accelerated projected gradient with adaptive restarts. Returns
/// `(β, dual minimum)`; by strong duality the primal optimum equals minus the
/// dual minimum.
pub fn dual_minimum(k: &[Vec<f64>], y: &[f64], c: f64, epsilon: f64, max_iterations: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let s: Vec<f64> = (0..2 * n).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    let p: Vec<f64> = (0..2 * n).map(|t| if t < n { epsilon - y[t] } else { epsilon + y[t - n] }).collect();
    let beta = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| a[i] - a[i + n]).collect() };
    let kb = |b: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| k[i][j] * b[j]).sum()).collect() };
    let value = |a: &[f64]| -> f64 {
        let b = beta(a);
        let q: f64 = b.iter().zip(kb(&b)).map(|(x, y)| x * y).sum();
        0.5 * q + a.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>()
    };
    // Q = [[K, −K], [−K, K]] has largest eigenvalue 2·λmax(K); pad the estimate
    let step = 1.0 / (2.0 * 1.01 * largest_eigenvalue(k)).max(1e-12);
    let mut a = vec![0.0; 2 * n];
    let mut fa = value(&a);
    let mut z = a.clone();
    let mut t: f64 = 1.0;
    for _ in 0..max_iterations {
        let kz = kb(&beta(&z));
        let grad: Vec<f64> = (0..2 * n).map(|i| s[i] * kz[i % n] + p[i]).collect();
        let next = project(&z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect::<Vec<_>>(), &s, c);
        let f_next = value(&next);
        let moved = next.iter().zip(&a).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if f_next > fa {
            if t == 1.0 {
                // a plain projected-gradient step no longer descends
                break;
            }
            // restart momentum whenever the objective goes up
            z = a.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        z = next.iter().zip(&a).map(|(x, y)| x + momentum * (x - y)).collect();
        a = next;
        fa = f_next;
        t = t_next;
        if moved <= 1e-11 * c.max(1.0) {
            break;
        }
    }
    (beta(&a), fa)
}

/// Maximal KKT violation `m(a) − M(a)` of dual coefficients `β` (libsvm convention).
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], beta: &[f64], c: f64, epsilon: f64) -> f64 {
    let n = y.len();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let kb: f64 = (0..n).map(|j| k[i][j] * beta[j]).sum();
        let (a, a_star) = (beta[i].max(0.0), (-beta[i]).max(0.0));
        // α with sign +1, gradient kb + ε − y
        let g = kb + epsilon - y[i];
        if a < c {
            up = up.max(-g);
        }
        if a > 0.0 {
            low = low.min(-g);
        }
        // α* with sign −1, gradient −kb + ε + y
        let g = -kb + epsilon + y[i];
        if a_star > 0.0 {
            up = up.max(g);
        }
        if a_star < c {
            low = low.min(g);
        }
    }
    (up - low).max(0.0)
}

/// Ordinary least squares with an intercept through the normal equations,
/// solved by Gauss–Jordan elimination with partial pivoting.
pub fn ols_predict(x: &Matrix, y: &[f64], x_new: &Matrix) -> Vec<f64> {
    let d = x.cols() + 1;
    let row = |m: &Matrix, i: usize| -> Vec<f64> { std::iter::once(1.0).chain(m.row(i).iter().copied()).collect() };
    let mut a = vec![vec![0.0; d + 1]; d];
    for i in 0..x.rows() {
        let r = row(x, i);
        for p in 0..d {
            for q in 0..d {
                a[p][q] += r[p] * r[q];
            }
            a[p][d] += r[p] * y[i];
        }
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        let lead = a[col][col];
        for v in a[col].iter_mut() {
            *v /= lead;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                let src = a[col].clone();
                for (v, s) in a[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    let coef: Vec<f64> = a.iter().map(|r| r[d]).collect();
    (0..x_new.rows()).map(|i| row(x_new, i).iter().zip(&coef).map(|(a, b)| a * b).sum()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for q in col..n {
                a[r][q] -= f * a[col][q];
            }
        }
    }
    det
}
