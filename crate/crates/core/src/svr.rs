//! ε-insensitive support vector regression.
//!
//! The dual of
//!
//! ```text
//! min ½‖w‖² + C Σ (ξᵢ + ξᵢ*)
//! s.t. yᵢ − ⟨w, xᵢ⟩ − b ≤ ε + ξᵢ,  ⟨w, xᵢ⟩ + b − yᵢ ≤ ε + ξᵢ*,  ξ, ξ* ≥ 0
//! ```
//!
//! is solved over the stacked multipliers `a = (α, α*)` in the form
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t. Σ sₜ aₜ = 0,  0 ≤ aₜ ≤ C
//! ```
//!
//! with `sₜ = +1` for α, `−1` for α*, `Q_st = s_s s_t K(x_s, x_t)` and
//! `p = (ε − y, ε + y)`. Pairs are chosen by second-order working-set
//! selection and updated analytically until the maximal KKT violation drops
//! below the tolerance. The fitted function is `f(x) = Σ βᵢ K(xᵢ, x) + b`
//! with `βᵢ = αᵢ − αᵢ*`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};
use crate::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "poly",
            KernelKind::Rbf => "rbf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(KernelKind::Linear),
            "poly" | "polynomial" => Some(KernelKind::Polynomial),
            "rbf" => Some(KernelKind::Rbf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// `1 / (n_features · Var(X))` over all training entries.
    Scale,
    /// `1 / n_features`.
    Auto,
    Fixed(f64),
}

impl GammaMode {
    pub fn name(self) -> alloc::string::String {
        match self {
            GammaMode::Scale => "scale".into(),
            GammaMode::Auto => "auto".into(),
            GammaMode::Fixed(g) => format!("{g:?}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scale" => Some(GammaMode::Scale),
            "auto" => Some(GammaMode::Auto),
            other => other.parse::<f64>().ok().filter(|g| *g > 0.0 && g.is_finite()).map(GammaMode::Fixed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Polynomial degree; ignored by the other kernels.
    pub degree: u32,
    pub gamma: GammaMode,
}

impl KernelConfig {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, degree: 3, gamma: GammaMode::Scale }
    }

    pub fn polynomial(degree: u32, gamma: GammaMode) -> Self {
        Self { kind: KernelKind::Polynomial, degree, gamma }
    }

    pub fn rbf(gamma: GammaMode) -> Self {
        Self { kind: KernelKind::Rbf, degree: 3, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Polynomial && self.degree == 0 {
            return Err(Error::InvalidArgument("polynomial degree must be at least 1".into()));
        }
        if let GammaMode::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    #[inline]
    fn eval_unchecked(&self, gamma: f64, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Polynomial => powi(gamma * dot(x, z) + 1.0, self.degree),
            KernelKind::Rbf => libm::exp(-gamma * squared_distance(x, z)),
        }
    }
}

#[inline]
fn powi(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// `⟨x,z⟩`, `(γ⟨x,z⟩ + 1)^d` or `exp(−γ‖x − z‖²)`.
pub fn kernel_eval(cfg: &KernelConfig, gamma: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Dimension(format!("kernel arguments of length {} and {}", x.len(), z.len())));
    }
    Ok(cfg.eval_unchecked(gamma, x, z))
}

pub fn resolve_gamma(mode: GammaMode, train: &Matrix) -> Result<f64> {
    let d = train.cols();
    if train.rows() == 0 || d == 0 {
        return Err(Error::Length("gamma needs a non-empty training matrix".into()));
    }
    match mode {
        GammaMode::Auto => Ok(1.0 / d as f64),
        GammaMode::Fixed(g) if g > 0.0 && g.is_finite() => Ok(g),
        GammaMode::Fixed(g) => Err(Error::InvalidArgument(format!("gamma must be positive, got {g}"))),
        GammaMode::Scale => {
            let v = train.as_slice();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(Error::Degenerate("gamma=scale on a matrix with zero variance".into()));
            }
            Ok(1.0 / (d as f64 * var))
        }
    }
}

/// `max(0, |y − f| − ε)`.
#[inline]
pub fn epsilon_loss(y: f64, f: f64, epsilon: f64) -> f64 {
    ((y - f).abs() - epsilon).max(0.0)
}

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelConfig,
    /// Stop once the maximal KKT violation is below this.
    pub tolerance: f64,
    /// Cap on pair updates; `None` means `10_000 · n`.
    pub max_iterations: Option<usize>,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: DEFAULT_EPSILON,
            kernel: KernelConfig::rbf(GammaMode::Scale),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation `m(a) − M(a)` at exit.
    pub max_violation: f64,
    /// Value of `½ aᵀQa + pᵀa` at exit (the negated dual objective).
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    /// Rows with non-zero β only.
    pub support_vectors: Matrix,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// `βᵢ = αᵢ − αᵢ*`.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelConfig,
    pub gamma: f64,
    pub diagnostics: FitDiagnostics,
}

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.cols()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut f = self.bias;
        for (i, b) in self.beta.iter().enumerate() {
            f += b * self.kernel.eval_unchecked(self.gamma, self.support_vectors.row(i), x);
        }
        f
    }

    /// `f(x) = Σ βᵢ K(xᵢ, x) + b` for every row of `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if !self.beta.is_empty() && x.cols() != self.n_features() {
            return Err(Error::Dimension(format!(
                "model has {} features, input has {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok((0..x.rows()).map(|i| self.decision(x.row(i))).collect())
    }
}

impl Predictor for SvrModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        SvrModel::predict(self, x)
    }
}

pub fn predict(model: &SvrModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}

/// Full training Gram matrix, row-major `n × n`.
pub fn gram_matrix(kernel: &KernelConfig, gamma: f64, x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval_unchecked(gamma, x.row(i), x.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

const TAU: f64 = 1e-12;

struct Solver<'a> {
    n: usize,
    gram: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl Solver<'_> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    #[inline]
    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    #[inline]
    fn k(&self, s: usize, t: usize) -> f64 {
        self.gram[(s % self.n) * self.n + t % self.n]
    }

    /// Second-order maximal violating pair, or the current violation when optimal.
    fn select(&self, tolerance: f64) -> core::result::Result<(usize, usize), f64> {
        let m = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            let v = if self.sign(t) > 0.0 {
                if self.at_upper(t) {
                    continue;
                }
                -self.grad[t]
            } else {
                if self.at_lower(t) {
                    continue;
                }
                self.grad[t]
            };
            if v > gmax {
                gmax = v;
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i == usize::MAX {
            return Err(0.0);
        }
        let kii = self.k(i, i);
        for t in 0..m {
            let st = self.sign(t);
            let (grad_diff, g2) = if st > 0.0 {
                if self.at_lower(t) {
                    continue;
                }
                (gmax + self.grad[t], self.grad[t])
            } else {
                if self.at_upper(t) {
                    continue;
                }
                (gmax - self.grad[t], -self.grad[t])
            };
            if g2 > gmax2 {
                gmax2 = g2;
            }
            if grad_diff > 0.0 {
                // second-order gain; the curvature reduces to K_ii + K_tt − 2K_it for both signs
                let quad = kii + self.k(t, t) - 2.0 * self.k(i, t);
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        let violation = gmax + gmax2;
        if violation < tolerance || j == usize::MAX {
            return Err(violation.max(0.0));
        }
        Ok((i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (si, sj) = (self.sign(i), self.sign(j));
        let qij = si * sj * self.k(i, j);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if si != sj {
            let quad = self.k(i, i) + self.k(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = self.k(i, i) + self.k(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        self.shift_gradient(i, ai - old_i);
        self.shift_gradient(j, aj - old_j);
    }

    /// `G += Q[:, s] · delta`.
    fn shift_gradient(&mut self, s: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let n = self.n;
        let w = self.sign(s) * delta;
        let row = &self.gram[(s % n) * n..(s % n + 1) * n];
        let (up, down) = self.grad.split_at_mut(n);
        for ((gu, gd), k) in up.iter_mut().zip(down.iter_mut()).zip(row) {
            let v = w * k;
            *gu += v;
            *gd -= v;
        }
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in 0..2 * self.n {
            let s = self.sign(t);
            let yg = s * self.grad[t];
            if self.at_upper(t) {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.at_lower(t) {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }

    fn objective(&self, p: &[f64]) -> f64 {
        self.alpha.iter().zip(&self.grad).zip(p).map(|((a, g), p)| a * (g + p)).sum::<f64>() / 2.0
    }
}

/// Trains an ε-SVR on `train_x`/`train_y`.
pub fn fit(train_x: &Matrix, train_y: &[f64], cfg: &SvrConfig) -> Result<SvrModel> {
    fit_warm(train_x, train_y, cfg, None)
}

/// Like [`fit`], optionally starting from dual coefficients `β` of a previous
/// fit on the same rows (for example with a smaller `C`). A start outside the
/// box or with `Σβ ≠ 0` is ignored and the fit starts from zero.
pub fn fit_warm(train_x: &Matrix, train_y: &[f64], cfg: &SvrConfig, start: Option<&[f64]>) -> Result<SvrModel> {
    cfg.validate()?;
    let n = train_x.rows();
    if n == 0 {
        return Err(Error::Length("SVR needs at least one training row".into()));
    }
    if train_y.len() != n {
        return Err(Error::Dimension(format!("{n} rows but {} targets", train_y.len())));
    }
    if let Some(i) = train_y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("target {i}")));
    }
    let gamma = match cfg.kernel.kind {
        KernelKind::Linear => 1.0,
        _ => resolve_gamma(cfg.kernel.gamma, train_x)?,
    };
    let gram = gram_matrix(&cfg.kernel, gamma, train_x);
    let p: Vec<f64> = train_y
        .iter()
        .map(|y| cfg.epsilon - y)
        .chain(train_y.iter().map(|y| cfg.epsilon + y))
        .collect();

    let mut solver = Solver { n, gram: &gram, c: cfg.c, alpha: vec![0.0; 2 * n], grad: p.clone() };
    if let Some(beta) = start {
        if beta.len() != n {
            return Err(Error::Dimension(format!("warm start of length {} for {n} rows", beta.len())));
        }
        let sum: f64 = beta.iter().sum();
        // rescaled starts may overshoot the box by rounding
        let fits = beta.iter().all(|b| b.abs() <= cfg.c * (1.0 + 1e-12));
        if fits && sum.abs() <= 1e-9 * cfg.c.max(1.0) {
            for (i, b) in beta.iter().map(|b| b.clamp(-cfg.c, cfg.c)).enumerate() {
                let (a, a_star) = if b > 0.0 { (b, 0.0) } else { (0.0, -b) };
                solver.alpha[i] = a;
                solver.alpha[i + n] = a_star;
                solver.shift_gradient(i, a);
                solver.shift_gradient(i + n, a_star);
            }
        }
    }

    let cap = cfg.max_iterations.unwrap_or(10_000usize.saturating_mul(n));
    let mut iterations = 0;
    let (converged, max_violation) = loop {
        match solver.select(cfg.tolerance) {
            Err(v) => break (true, v),
            Ok((i, j)) => {
                if iterations >= cap {
                    break (false, violation(&solver));
                }
                solver.update(i, j);
                iterations += 1;
            }
        }
    };

    let bias = solver.bias();
    let objective = solver.objective(&p);
    let mut support_indices = Vec::new();
    let mut beta = Vec::new();
    for i in 0..n {
        let b = solver.alpha[i] - solver.alpha[i + n];
        if b != 0.0 {
            support_indices.push(i);
            beta.push(b);
        }
    }
    Ok(SvrModel {
        support_vectors: train_x.select_rows(&support_indices),
        support_indices,
        beta,
        bias,
        kernel: cfg.kernel,
        gamma,
        diagnostics: FitDiagnostics { iterations, converged, max_violation, objective },
    })
}

fn violation(s: &Solver<'_>) -> f64 {
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..2 * s.n {
        let v = -s.sign(t) * s.grad[t];
        let in_up = if s.sign(t) > 0.0 { !s.at_upper(t) } else { !s.at_lower(t) };
        let in_low = if s.sign(t) > 0.0 { !s.at_lower(t) } else { !s.at_upper(t) };
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

/// Primal objective `½‖w‖² + C Σ L_ε(yᵢ, f(xᵢ))` of a fitted model on its training data,
/// with `‖w‖² = βᵀKβ`.
pub fn primal_objective(model: &SvrModel, x: &Matrix, y: &[f64], c: f64, epsilon: f64) -> Result<f64> {
    let f = model.predict(x)?;
    let loss: f64 = y.iter().zip(&f).map(|(yi, fi)| epsilon_loss(*yi, *fi, epsilon)).sum();
    let sv = &model.support_vectors;
    let mut w2 = 0.0;
    for (i, bi) in model.beta.iter().enumerate() {
        for (j, bj) in model.beta.iter().enumerate() {
            w2 += bi * bj * model.kernel.eval_unchecked(model.gamma, sv.row(i), sv.row(j));
        }
    }
    Ok(0.5 * w2 + c * loss)
}
