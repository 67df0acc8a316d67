//! Run configuration, read from TOML.
//!
//! ```toml
//! input = "synthetic_panel.csv"
//! output_dir = "co2-output"
//! seed = 0
//! standardize = "global"
//! folds = 5
//!
//! [split]
//! test_fraction = 0.2
//!
//! [grid]
//! kernels = ["linear", "poly", "rbf"]
//! c_values = [0.1, 1.0, 10.0]
//! ```
//!
//! Exactly one of `[svr]` (a fixed configuration) or `[grid]` must be present.
//! A relative `input` is resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use co2_core::data::SplitSpec;
use co2_core::importance::{ImportanceConfig, Score};
use co2_core::selection::Grid;
use co2_core::stationarity::{AdfSpec, LagSelection, MaxLag, RegressionKind};
use co2_core::svr::{self, GammaMode, KernelConfig, KernelKind, SvrConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, PipelineError, Result};

// per-stage offsets from the global seed
const SPLIT_SEED_OFFSET: u64 = 1;
const FOLD_SEED_OFFSET: u64 = 2;
const IMPORTANCE_SEED_OFFSET: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    /// Fit on the whole panel before splitting.
    #[default]
    Global,
    /// Fit on the training rows only.
    TrainOnly,
}

impl StandardizeMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "global" => Some(Self::Global),
            "train-only" | "train_only" => Some(Self::TrainOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub standardize: StandardizeMode,
    /// Cross-validation folds for the grid search and PCR alike.
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub adf: AdfSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svr: Option<SvrSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub pcr: PcrSection,
    #[serde(default)]
    pub importance: ImportanceSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("co2-output")
}

fn default_folds() -> usize {
    5
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            output_dir: default_output_dir(),
            seed: 0,
            standardize: StandardizeMode::Global,
            folds: default_folds(),
            split: SplitSection::default(),
            adf: AdfSection::default(),
            svr: None,
            grid: Some(GridSection::default()),
            pcr: PcrSection::default(),
            importance: ImportanceSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub shuffle: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { test_fraction: 0.2, shuffle: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionName {
    #[serde(alias = "c")]
    Constant,
    #[serde(alias = "ct")]
    ConstantTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxLagSetting {
    Auto(AutoTag),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagSelectionName {
    Aic,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdfSection {
    pub regression: RegressionName,
    pub max_lag: MaxLagSetting,
    pub lag_selection: LagSelectionName,
}

impl Default for AdfSection {
    fn default() -> Self {
        Self {
            regression: RegressionName::Constant,
            max_lag: MaxLagSetting::Auto(AutoTag::Auto),
            lag_selection: LagSelectionName::Aic,
        }
    }
}

impl AdfSection {
    pub fn spec(&self) -> AdfSpec {
        AdfSpec {
            regression: match self.regression {
                RegressionName::Constant => RegressionKind::Constant,
                RegressionName::ConstantTrend => RegressionKind::ConstantTrend,
            },
            max_lag: match self.max_lag {
                MaxLagSetting::Auto(_) => MaxLag::Auto,
                MaxLagSetting::Fixed(l) => MaxLag::Fixed(l),
            },
            lag_selection: match self.lag_selection {
                LagSelectionName::Aic => LagSelection::Aic,
                LagSelectionName::Fixed => LagSelection::Fixed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    Linear,
    #[serde(alias = "polynomial")]
    Poly,
    Rbf,
}

impl From<KernelName> for KernelKind {
    fn from(k: KernelName) -> Self {
        match k {
            KernelName::Linear => KernelKind::Linear,
            KernelName::Poly => KernelKind::Polynomial,
            KernelName::Rbf => KernelKind::Rbf,
        }
    }
}

impl From<KernelKind> for KernelName {
    fn from(k: KernelKind) -> Self {
        match k {
            KernelKind::Linear => KernelName::Linear,
            KernelKind::Polynomial => KernelName::Poly,
            KernelKind::Rbf => KernelName::Rbf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaName {
    Scale,
    Auto,
}

/// `"scale"`, `"auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Named(GammaName),
    Value(f64),
}

impl From<GammaSetting> for GammaMode {
    fn from(g: GammaSetting) -> Self {
        match g {
            GammaSetting::Named(GammaName::Scale) => GammaMode::Scale,
            GammaSetting::Named(GammaName::Auto) => GammaMode::Auto,
            GammaSetting::Value(v) => GammaMode::Fixed(v),
        }
    }
}

impl From<GammaMode> for GammaSetting {
    fn from(g: GammaMode) -> Self {
        match g {
            GammaMode::Scale => GammaSetting::Named(GammaName::Scale),
            GammaMode::Auto => GammaSetting::Named(GammaName::Auto),
            GammaMode::Fixed(v) => GammaSetting::Value(v),
        }
    }
}

/// A fixed SVR configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrSection {
    pub kernel: KernelName,
    pub c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: GammaSetting,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

fn default_epsilon() -> f64 {
    svr::DEFAULT_EPSILON
}

fn default_gamma() -> GammaSetting {
    GammaSetting::Named(GammaName::Scale)
}

fn default_degree() -> u32 {
    3
}

fn default_tolerance() -> f64 {
    svr::DEFAULT_TOLERANCE
}

impl SvrSection {
    pub fn to_config(&self) -> SvrConfig {
        SvrConfig {
            c: self.c,
            epsilon: self.epsilon,
            kernel: KernelConfig { kind: self.kernel.into(), degree: self.degree, gamma: self.gamma.into() },
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn from_config(cfg: &SvrConfig) -> Self {
        Self {
            kernel: cfg.kernel.kind.into(),
            c: cfg.c,
            epsilon: cfg.epsilon,
            gamma: cfg.kernel.gamma.into(),
            degree: cfg.kernel.degree,
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub kernels: Vec<KernelName>,
    pub c_values: Vec<f64>,
    pub gamma: Vec<GammaSetting>,
    /// Only used by the polynomial kernel.
    pub degrees: Vec<u32>,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self::from_grid(&Grid::default())
    }
}

impl GridSection {
    pub fn to_grid(&self) -> Grid {
        Grid {
            kernels: self.kernels.iter().map(|&k| k.into()).collect(),
            c_values: self.c_values.clone(),
            gamma_modes: self.gamma.iter().map(|&g| g.into()).collect(),
            degrees: self.degrees.clone(),
            epsilon: self.epsilon,
            tolerance: self.tolerance,
        }
    }

    pub fn from_grid(grid: &Grid) -> Self {
        Self {
            kernels: grid.kernels.iter().map(|&k| k.into()).collect(),
            c_values: grid.c_values.clone(),
            gamma: grid.gamma_modes.iter().map(|&g| g.into()).collect(),
            degrees: grid.degrees.clone(),
            epsilon: grid.epsilon,
            tolerance: grid.tolerance,
        }
    }
}

/// Either a pinned component count `k` or a cumulative EVR target (0.90 when
/// neither is given).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcrSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_evr: Option<f64>,
}

pub const DEFAULT_TARGET_EVR: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentChoice {
    Fixed(usize),
    TargetEvr(f64),
}

impl PcrSection {
    pub fn choice(&self) -> ComponentChoice {
        match (self.k, self.target_evr) {
            (Some(k), _) => ComponentChoice::Fixed(k),
            (None, Some(t)) => ComponentChoice::TargetEvr(t),
            (None, None) => ComponentChoice::TargetEvr(DEFAULT_TARGET_EVR),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreName {
    #[serde(alias = "r2", alias = "r_squared")]
    RSquared,
    #[serde(alias = "neg_mse")]
    NegMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceSection {
    pub n_permutations: usize,
    pub score: ScoreName,
}

impl Default for ImportanceSection {
    fn default() -> Self {
        Self { n_permutations: 10, score: ScoreName::RSquared }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving a relative `input`
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            PipelineError::Config(msg) => PipelineError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        match (&self.svr, &self.grid) {
            (Some(_), Some(_)) => return bad("both [svr] and [grid] are present; keep exactly one".into()),
            (None, None) => return bad("one of [svr] or [grid] is required".into()),
            (Some(s), None) => s.to_config().validate()?,
            (None, Some(g)) => {
                let grid = g.to_grid();
                grid.validate()?;
                for cfg in grid.candidates() {
                    cfg.validate()?;
                }
            }
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!("split.test_fraction must lie in (0, 1), got {}", self.split.test_fraction));
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.pcr.k.is_some() && self.pcr.target_evr.is_some() {
            return bad("set either pcr.k or pcr.target_evr, not both".into());
        }
        if self.pcr.k == Some(0) {
            return bad("pcr.k must be at least 1".into());
        }
        if let Some(t) = self.pcr.target_evr {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("pcr.target_evr must lie in (0, 1], got {t}"));
            }
        }
        if self.importance.n_permutations == 0 {
            return bad("importance.n_permutations must be at least 1".into());
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.split.test_fraction,
            seed: self.seed.wrapping_add(SPLIT_SEED_OFFSET),
            shuffle: self.split.shuffle,
        }
    }

    pub fn fold_seed(&self) -> u64 {
        self.seed.wrapping_add(FOLD_SEED_OFFSET)
    }

    pub fn importance_config(&self) -> ImportanceConfig {
        ImportanceConfig {
            n_permutations: self.importance.n_permutations,
            seed: self.seed.wrapping_add(IMPORTANCE_SEED_OFFSET),
            score: match self.importance.score {
                ScoreName::RSquared => Score::RSquared,
                ScoreName::NegMse => Score::NegMse,
            },
        }
    }

    /// The grid to search; a fixed `[svr]` becomes a one-candidate grid.
    pub fn grid(&self) -> Grid {
        match (&self.svr, &self.grid) {
            (Some(s), _) => Grid::single(&s.to_config()),
            (None, Some(g)) => g.to_grid(),
            (None, None) => Grid::default(),
        }
    }
}

/// A `[svr]` section for `cfg`, loadable as part of a run config.
pub fn svr_section_toml(cfg: &SvrConfig) -> String {
    #[derive(Serialize)]
    struct Wrapper {
        svr: SvrSection,
    }
    toml::to_string(&Wrapper { svr: SvrSection::from_config(cfg) }).expect("svr section serializes")
}
