//! Versioned plain-text model files.
//!
//! A file starts with a magic line (`co2-svr-model v1` or `co2-pcr-model v1`),
//! followed by `key = value` lines and then `[section]` blocks whose lines hold
//! whitespace-separated numbers. Floats are written with Rust's shortest
//! round-trip formatting, so reading a file back reproduces every bit.
//!
//! ```text
//! co2-svr-model v1
//! kernel = poly
//! degree = 2
//! gamma_mode = auto
//! gamma = 0.1
//! c = 100
//! epsilon = 0.1
//! tolerance = 0.001
//! bias = -0.25
//! n_features = 10
//! n_support = 2
//! iterations = 57
//! converged = true
//! max_violation = 0.0009
//! objective = -3.5
//! [standardization]      optional; 4 lines: feature means, feature stds, target mean, target std
//! [support_indices]      one line, n_support training-row indices
//! [beta]                 one line, n_support values
//! [support_vectors]      n_support lines of n_features values
//! ```
//!
//! PCR files carry `k`, `n_features`, `intercept`, then `[standardization]`,
//! `[coefficients]` (k values), `[column_means]`, `[eigenvalues]`,
//! `[explained_variance_ratios]` and `[loadings]` (n_features rows, row-major).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use co2_core::data::{StandardizationParams, N_FEATURES};
use co2_core::pca::{PcaBasis, PcrModel};
use co2_core::svr::{FitDiagnostics, GammaMode, KernelConfig, KernelKind, SvrConfig, SvrModel};
use co2_core::Matrix;

use crate::error::{io_err, PipelineError, Result};

pub const SVR_MAGIC: &str = "co2-svr-model v1";
pub const PCR_MAGIC: &str = "co2-pcr-model v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SavedSvr {
    pub config: SvrConfig,
    pub model: SvrModel,
    pub standardization: Option<StandardizationParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedPcr {
    pub model: PcrModel,
    pub standardization: Option<StandardizationParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Svr(SavedSvr),
    Pcr(SavedPcr),
}

impl SavedModel {
    pub fn standardization(&self) -> Option<&StandardizationParams> {
        match self {
            SavedModel::Svr(s) => s.standardization.as_ref(),
            SavedModel::Pcr(p) => p.standardization.as_ref(),
        }
    }

    pub fn predictor(&self) -> &dyn co2_core::Predictor {
        match self {
            SavedModel::Svr(s) => &s.model,
            SavedModel::Pcr(p) => &p.model,
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn write_standardization(out: &mut String, p: &StandardizationParams) {
    out.push_str("[standardization]\n");
    let _ = writeln!(out, "{}", join(&p.means));
    let _ = writeln!(out, "{}", join(&p.stds));
    let _ = writeln!(out, "{}", p.target_mean);
    let _ = writeln!(out, "{}", p.target_std);
}

pub fn svr_to_string(saved: &SavedSvr) -> String {
    let SavedSvr { config, model, standardization } = saved;
    let mut out = String::new();
    let _ = writeln!(out, "{SVR_MAGIC}");
    let _ = writeln!(out, "kernel = {}", model.kernel.kind.name());
    let _ = writeln!(out, "degree = {}", model.kernel.degree);
    let _ = writeln!(out, "gamma_mode = {}", model.kernel.gamma.name());
    let _ = writeln!(out, "gamma = {}", model.gamma);
    let _ = writeln!(out, "c = {}", config.c);
    let _ = writeln!(out, "epsilon = {}", config.epsilon);
    let _ = writeln!(out, "tolerance = {}", config.tolerance);
    if let Some(cap) = config.max_iterations {
        let _ = writeln!(out, "max_iterations = {cap}");
    }
    let _ = writeln!(out, "bias = {}", model.bias);
    let _ = writeln!(out, "n_features = {}", model.support_vectors.cols());
    let _ = writeln!(out, "n_support = {}", model.beta.len());
    let d = &model.diagnostics;
    let _ = writeln!(out, "iterations = {}", d.iterations);
    let _ = writeln!(out, "converged = {}", d.converged);
    let _ = writeln!(out, "max_violation = {}", d.max_violation);
    let _ = writeln!(out, "objective = {}", d.objective);
    if let Some(p) = standardization {
        write_standardization(&mut out, p);
    }
    out.push_str("[support_indices]\n");
    let idx: Vec<String> = model.support_indices.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}", idx.join(" "));
    out.push_str("[beta]\n");
    let _ = writeln!(out, "{}", join(&model.beta));
    out.push_str("[support_vectors]\n");
    for i in 0..model.support_vectors.rows() {
        let _ = writeln!(out, "{}", join(model.support_vectors.row(i)));
    }
    out
}

pub fn pcr_to_string(saved: &SavedPcr) -> String {
    let m = &saved.model;
    let mut out = String::new();
    let _ = writeln!(out, "{PCR_MAGIC}");
    let _ = writeln!(out, "k = {}", m.k);
    let _ = writeln!(out, "n_features = {}", m.basis.column_means.len());
    let _ = writeln!(out, "intercept = {}", m.intercept);
    if let Some(p) = &saved.standardization {
        write_standardization(&mut out, p);
    }
    for (name, values) in [
        ("coefficients", &m.coefficients),
        ("column_means", &m.basis.column_means),
        ("eigenvalues", &m.basis.eigenvalues),
        ("explained_variance_ratios", &m.basis.explained_variance_ratios),
    ] {
        let _ = writeln!(out, "[{name}]\n{}", join(values));
    }
    out.push_str("[loadings]\n");
    for i in 0..m.basis.loadings.rows() {
        let _ = writeln!(out, "{}", join(m.basis.loadings.row(i)));
    }
    out
}

struct Parsed {
    keys: BTreeMap<String, String>,
    sections: BTreeMap<String, Vec<String>>,
}

impl Parsed {
    fn parse(text: &str, magic: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(first) if first.trim() == magic => {}
            Some(first) => return Err(PipelineError::ModelFile(format!("expected '{magic}', found '{first}'"))),
            None => return Err(PipelineError::ModelFile("empty file".into())),
        }
        let mut keys = BTreeMap::new();
        let mut sections: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if sections.insert(name.to_owned(), Vec::new()).is_some() {
                    return Err(PipelineError::ModelFile(format!("section [{name}] repeated")));
                }
                current = Some(name.to_owned());
            } else if let Some(section) = &current {
                sections.get_mut(section).expect("inserted").push(line.to_owned());
            } else {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| PipelineError::ModelFile(format!("expected 'key = value', found '{line}'")))?;
                keys.insert(k.trim().to_owned(), v.trim().to_owned());
            }
        }
        Ok(Self { keys, sections })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.keys.get(key).map(String::as_str).ok_or_else(|| PipelineError::ModelFile(format!("missing key '{key}'")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| PipelineError::ModelFile(format!("bad value for '{key}': '{raw}'")))
    }

    fn rows(&self, name: &str) -> Result<&[String]> {
        self.sections
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| PipelineError::ModelFile(format!("missing section [{name}]")))
    }

    fn numbers(line: &str, section: &str) -> Result<Vec<f64>> {
        line.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| PipelineError::ModelFile(format!("bad number '{t}' in [{section}]"))))
            .collect()
    }

    /// A section holding exactly one line of `len` numbers; an empty section reads as no numbers.
    fn vector(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        let rows = self.rows(name)?;
        let values = match rows {
            [] => Vec::new(),
            [line] => Self::numbers(line, name)?,
            _ => return Err(PipelineError::ModelFile(format!("[{name}] must be a single line"))),
        };
        if values.len() != len {
            return Err(PipelineError::ModelFile(format!("[{name}] has {} values, expected {len}", values.len())));
        }
        Ok(values)
    }

    fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let lines = self.rows(name)?;
        if lines.len() != rows {
            return Err(PipelineError::ModelFile(format!("[{name}] has {} rows, expected {rows}", lines.len())));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            let v = Self::numbers(line, name)?;
            if v.len() != cols {
                return Err(PipelineError::ModelFile(format!("[{name}] row of {} values, expected {cols}", v.len())));
            }
            data.extend(v);
        }
        Ok(Matrix::new(rows, cols, data)?)
    }

    fn standardization(&self) -> Result<Option<StandardizationParams>> {
        let Some(lines) = self.sections.get("standardization") else { return Ok(None) };
        if lines.len() != 4 {
            return Err(PipelineError::ModelFile("[standardization] needs 4 lines".into()));
        }
        let vec10 = |line: &str| -> Result<[f64; N_FEATURES]> {
            Self::numbers(line, "standardization")?
                .try_into()
                .map_err(|_| PipelineError::ModelFile(format!("[standardization] needs {N_FEATURES} values per row")))
        };
        let scalar = |line: &str| -> Result<f64> {
            match Self::numbers(line, "standardization")?.as_slice() {
                [v] => Ok(*v),
                _ => Err(PipelineError::ModelFile("[standardization] target lines hold one value".into())),
            }
        };
        Ok(Some(StandardizationParams {
            means: vec10(&lines[0])?,
            stds: vec10(&lines[1])?,
            target_mean: scalar(&lines[2])?,
            target_std: scalar(&lines[3])?,
        }))
    }
}

pub fn svr_from_str(text: &str) -> Result<SavedSvr> {
    let p = Parsed::parse(text, SVR_MAGIC)?;
    let kind = KernelKind::parse(p.raw("kernel")?)
        .ok_or_else(|| PipelineError::ModelFile(format!("unknown kernel '{}'", p.raw("kernel").unwrap_or_default())))?;
    let gamma_mode = GammaMode::parse(p.raw("gamma_mode")?)
        .ok_or_else(|| PipelineError::ModelFile("unknown gamma_mode".into()))?;
    let kernel = KernelConfig { kind, degree: p.get("degree")?, gamma: gamma_mode };
    let config = SvrConfig {
        c: p.get("c")?,
        epsilon: p.get("epsilon")?,
        kernel,
        tolerance: p.get("tolerance")?,
        max_iterations: if p.keys.contains_key("max_iterations") { Some(p.get("max_iterations")?) } else { None },
    };
    config.validate()?;
    let n_features: usize = p.get("n_features")?;
    let n_support: usize = p.get("n_support")?;
    let support_indices: Vec<usize> = match p.rows("support_indices")? {
        [] => Vec::new(),
        [line] => line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| PipelineError::ModelFile(format!("bad index '{t}'"))))
            .collect::<Result<_>>()?,
        _ => return Err(PipelineError::ModelFile("[support_indices] must be a single line".into())),
    };
    if support_indices.len() != n_support {
        return Err(PipelineError::ModelFile(format!("{} support indices for {n_support} vectors", support_indices.len())));
    }
    let model = SvrModel {
        support_vectors: p.matrix("support_vectors", n_support, n_features)?,
        support_indices,
        beta: p.vector("beta", n_support)?,
        bias: p.get("bias")?,
        kernel,
        gamma: p.get("gamma")?,
        diagnostics: FitDiagnostics {
            iterations: p.get("iterations")?,
            converged: p.get("converged")?,
            max_violation: p.get("max_violation")?,
            objective: p.get("objective")?,
        },
    };
    Ok(SavedSvr { config, model, standardization: p.standardization()? })
}

pub fn pcr_from_str(text: &str) -> Result<SavedPcr> {
    let p = Parsed::parse(text, PCR_MAGIC)?;
    let k: usize = p.get("k")?;
    let d: usize = p.get("n_features")?;
    if k == 0 || k > d {
        return Err(PipelineError::ModelFile(format!("k = {k} outside 1..={d}")));
    }
    let basis = PcaBasis {
        loadings: p.matrix("loadings", d, d)?,
        eigenvalues: p.vector("eigenvalues", d)?,
        explained_variance_ratios: p.vector("explained_variance_ratios", d)?,
        column_means: p.vector("column_means", d)?,
    };
    let model = PcrModel { basis, k, coefficients: p.vector("coefficients", k)?, intercept: p.get("intercept")? };
    Ok(SavedPcr { model, standardization: p.standardization()? })
}

/// Reads either kind of model file, dispatching on the magic line.
pub fn model_from_str(text: &str) -> Result<SavedModel> {
    match text.lines().next().map(str::trim) {
        Some(SVR_MAGIC) => svr_from_str(text).map(SavedModel::Svr),
        Some(PCR_MAGIC) => pcr_from_str(text).map(SavedModel::Pcr),
        other => Err(PipelineError::ModelFile(format!("unrecognised model header {other:?}"))),
    }
}

pub fn model_to_string(model: &SavedModel) -> String {
    match model {
        SavedModel::Svr(s) => svr_to_string(s),
        SavedModel::Pcr(p) => pcr_to_string(p),
    }
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    model_from_str(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use co2_core::pca::fit_pcr;
    use co2_core::svr::fit;

    fn data() -> (Matrix, Vec<f64>) {
        let x = Matrix::new(12, 3, (0..36).map(|i| ((i * 7919) % 31) as f64 / 7.0 - 2.0).collect()).unwrap();
        let y = (0..12).map(|i| x[(i, 0)] * 0.3 - x[(i, 2)] + (x[(i, 1)] * x[(i, 1)]) * 0.1).collect();
        (x, y)
    }

    fn params() -> StandardizationParams {
        StandardizationParams {
            means: [0.1; N_FEATURES],
            stds: [1.0 / 3.0; N_FEATURES],
            target_mean: 1e12 + 0.5,
            target_std: 2.5e-7,
        }
    }

    #[test]
    fn svr_round_trip_is_bit_exact() {
        let (x, y) = data();
        for kernel in [KernelConfig::linear(), KernelConfig::polynomial(3, GammaMode::Auto), KernelConfig::rbf(GammaMode::Scale)] {
            let config = SvrConfig { kernel, c: 3.0, ..Default::default() };
            let saved = SavedSvr { config, model: fit(&x, &y, &config).unwrap(), standardization: Some(params()) };
            let text = svr_to_string(&saved);
            let back = svr_from_str(&text).unwrap();
            assert_eq!(back, saved);
            assert_eq!(svr_to_string(&back), text);
            assert_eq!(back.model.predict(&x).unwrap(), saved.model.predict(&x).unwrap());
        }
    }

    #[test]
    fn pcr_round_trip_is_bit_exact() {
        let (x, y) = data();
        let saved = SavedPcr { model: fit_pcr(&x, &y, 2).unwrap(), standardization: None };
        let text = pcr_to_string(&saved);
        assert_eq!(pcr_from_str(&text).unwrap(), saved);
        assert!(matches!(model_from_str(&text).unwrap(), SavedModel::Pcr(_)));
    }

    #[test]
    fn empty_support_round_trips() {
        let (x, y) = data();
        let config = SvrConfig { epsilon: 100.0, ..Default::default() };
        let saved = SavedSvr { config, model: fit(&x, &y, &config).unwrap(), standardization: None };
        assert!(saved.model.beta.is_empty());
        assert_eq!(svr_from_str(&svr_to_string(&saved)).unwrap(), saved);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (x, y) = data();
        let config = SvrConfig::default();
        let text = svr_to_string(&SavedSvr { config, model: fit(&x, &y, &config).unwrap(), standardization: None });
        assert!(svr_from_str(&text.replace(SVR_MAGIC, "co2-svr-model v0")).is_err());
        assert!(svr_from_str(&text.replace("kernel = rbf", "kernel = sigmoid")).is_err());
        let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(svr_from_str(&truncated).is_err());
        assert!(model_from_str("hello").is_err());
    }
}
