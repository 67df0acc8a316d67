//! Stage functions shared by the subcommands, and the end-to-end driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use co2_core::data::{self, PanelDataset, StandardizationParams, FEATURES};
use co2_core::importance::{self, ImportanceReport};
use co2_core::pca::{self, PcaBasis, PcrModel};
use co2_core::reporting::{self, CountrySeries, ScatterTable};
use co2_core::selection::{self, CvReport, FoldScores, PcrCvReport};
use co2_core::stationarity::{self, FeatureStationarity};
use co2_core::svr::{self, SvrConfig, SvrModel};
use co2_core::Predictor;
use sha2::{Digest, Sha256};

use crate::config::{self, ComponentChoice, RunConfig, StandardizeMode};
use crate::error::{io_err, PipelineError, Result};
use crate::model_file::{self, SavedModel, SavedPcr, SavedSvr};
use crate::tables::{self, MetricRow};
use crate::{io, plots};

pub const MANIFEST: &str = "manifest.txt";

/// Which rows of the panel an operation uses. Train and test follow the
/// configured split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSet {
    All,
    Train,
    Test,
}

impl RowSet {
    pub fn name(self) -> &'static str {
        match self {
            RowSet::All => "all",
            RowSet::Train => "train",
            RowSet::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(RowSet::All),
            "train" => Some(RowSet::Train),
            "test" => Some(RowSet::Test),
            _ => None,
        }
    }
}

/// The raw panel, its standardized copy and the train/test split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw: PanelDataset,
    pub params: StandardizationParams,
    /// Every row, standardized with `params`.
    pub standardized: PanelDataset,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub train: PanelDataset,
    pub test: PanelDataset,
}

impl Prepared {
    pub fn rows(&self, which: RowSet) -> PanelDataset {
        match which {
            RowSet::All => self.standardized.clone(),
            RowSet::Train => self.train.clone(),
            RowSet::Test => self.test.clone(),
        }
    }
}

pub fn load_input(cfg: &RunConfig) -> Result<PanelDataset> {
    let path = cfg.input.as_deref().ok_or_else(|| PipelineError::Config("no input file given".into()))?;
    io::load_panel(path)
}

/// Splits the panel and standardizes it, fitting the parameters on all rows
/// or on the training rows per `cfg.standardize`.
pub fn prepare(raw: PanelDataset, cfg: &RunConfig) -> Result<Prepared> {
    let (train_idx, test_idx) = data::split_indices(raw.len(), &cfg.split_spec())?;
    let params = match cfg.standardize {
        StandardizeMode::Global => data::fit_standardizer(&raw)?,
        StandardizeMode::TrainOnly => data::fit_standardizer(&raw.subset(&train_idx))?,
    };
    Ok(with_params(raw, params, train_idx, test_idx))
}

/// Like [`prepare`] but with standardization parameters fixed in advance,
/// e.g. those stored with a model.
pub fn prepare_with(raw: PanelDataset, params: StandardizationParams, cfg: &RunConfig) -> Result<Prepared> {
    let (train_idx, test_idx) = data::split_indices(raw.len(), &cfg.split_spec())?;
    Ok(with_params(raw, params, train_idx, test_idx))
}

fn with_params(raw: PanelDataset, params: StandardizationParams, train_idx: Vec<usize>, test_idx: Vec<usize>) -> Prepared {
    let standardized = data::apply_standardizer(&params, &raw);
    let train = standardized.subset(&train_idx);
    let test = standardized.subset(&test_idx);
    Prepared { raw, params, standardized, train_idx, test_idx, train, test }
}

pub fn run_adf(raw: &PanelDataset, cfg: &RunConfig) -> Result<Vec<FeatureStationarity>> {
    Ok(stationarity::test_all_features(raw, &cfg.adf.spec())?)
}

pub fn grid_search(prep: &Prepared, cfg: &RunConfig) -> Result<CvReport> {
    let (x, y) = (prep.train.features_matrix(), prep.train.targets());
    Ok(selection::grid_search_svr(&x, &y, &cfg.grid(), cfg.folds, cfg.fold_seed())?)
}

pub fn fit_svr(prep: &Prepared, svr_cfg: &SvrConfig) -> Result<SvrModel> {
    Ok(svr::fit(&prep.train.features_matrix(), &prep.train.targets(), svr_cfg)?)
}

#[derive(Debug, Clone)]
pub struct PcrFit {
    pub basis: PcaBasis,
    pub model: PcrModel,
    pub cv: PcrCvReport,
}

pub fn choose_components(basis: &PcaBasis, choice: ComponentChoice) -> Result<usize> {
    match choice {
        ComponentChoice::Fixed(k) if k <= basis.n_components_total() => Ok(k),
        ComponentChoice::Fixed(k) => {
            Err(PipelineError::Config(format!("{k} components requested but only {} features", basis.n_components_total())))
        }
        ComponentChoice::TargetEvr(t) => Ok(pca::select_k(&basis.explained_variance_ratios, t)?),
    }
}

/// PCA on the training rows, k-fold CV with PCA refitted per fold, then the
/// final fit on all training rows.
pub fn fit_pcr(prep: &Prepared, choice: ComponentChoice, cfg: &RunConfig) -> Result<PcrFit> {
    let (x, y) = (prep.train.features_matrix(), prep.train.targets());
    let basis = pca::fit_pca(&x)?;
    let k = choose_components(&basis, choice)?;
    let cv = selection::cross_validate_pcr(&x, &y, k, cfg.folds, cfg.fold_seed())?;
    let model = pca::fit_pcr(&x, &y, k)?;
    Ok(PcrFit { basis, model, cv })
}

/// `(R², MSE)` of `model` on `rows`, in standardized units.
pub fn score<P: Predictor + ?Sized>(model: &P, rows: &PanelDataset) -> Result<(f64, f64)> {
    let predicted = model.predict(&rows.features_matrix())?;
    let actual = rows.targets();
    Ok((selection::r_squared(&actual, &predicted)?, selection::mse(&actual, &predicted)?))
}

pub fn run_importance<P: Predictor + ?Sized>(model: &P, rows: &PanelDataset, cfg: &RunConfig) -> Result<ImportanceReport> {
    Ok(importance::permutation_importance(model, &rows.features_matrix(), &rows.targets(), &cfg.importance_config())?)
}

pub fn feature_names() -> Vec<&'static str> {
    FEATURES.iter().map(|f| f.name).collect()
}

/// Per-country series over `rows` and the actual-vs-predicted scatter, both
/// in kilotonnes.
pub fn country_reports<P: Predictor + ?Sized>(
    model: &P,
    rows: &PanelDataset,
    params: &StandardizationParams,
) -> Result<(Vec<CountrySeries>, ScatterTable)> {
    let predicted = model.predict(&rows.features_matrix())?;
    let series = reporting::country_report(rows, &predicted, params)?;
    let actual_kt: Vec<f64> = rows.targets().iter().map(|&v| params.unscale_target(v)).collect();
    let predicted_kt: Vec<f64> = predicted.iter().map(|&v| params.unscale_target(v)).collect();
    Ok((series, reporting::scatter_data(&actual_kt, &predicted_kt)?))
}

/// Files written under one output directory, tracked for the manifest.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Paths relative to the root, in write order.
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn write(&mut self, name: &str, body: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        self.files.push(PathBuf::from(name));
        Ok(path)
    }

    /// Renders a CSV table into `name`.
    pub fn table(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, buf)
    }

    pub fn plots(&mut self, series: &[CountrySeries], scatter: &ScatterTable) -> Result<()> {
        let written = plots::emit_plots(series, scatter, &self.path("plots"))?;
        for p in written {
            let rel = p.strip_prefix(&self.root).unwrap_or(&p).to_path_buf();
            self.files.push(rel);
        }
        Ok(())
    }

    /// Writes `manifest.txt`: one `sha256  path` line per artifact sorted by
    /// path, then the run status.
    pub fn write_manifest(&self, failed_stage: Option<&str>) -> Result<PathBuf> {
        let mut names: Vec<String> = self.files.iter().map(|p| slash_path(p)).collect();
        names.sort();
        names.dedup();
        let mut out = String::new();
        for name in &names {
            let path = self.root.join(name);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(out, "{hex}  {name}");
        }
        match failed_stage {
            None => out.push_str("status: complete\n"),
            Some(stage) => {
                let _ = writeln!(out, "status: incomplete (stage '{stage}' failed)");
            }
        }
        let path = self.path(MANIFEST);
        std::fs::write(&path, out).map_err(io_err(&path))?;
        Ok(path)
    }
}

fn slash_path(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

pub fn write_svr_model(arts: &mut Artifacts, name: &str, config: &SvrConfig, model: &SvrModel, params: &StandardizationParams) -> Result<PathBuf> {
    let saved = SavedSvr { config: *config, model: model.clone(), standardization: Some(params.clone()) };
    arts.write(name, model_file::svr_to_string(&saved))
}

pub fn write_pcr_artifacts(arts: &mut Artifacts, fit: &PcrFit, params: &StandardizationParams) -> Result<()> {
    let saved = SavedPcr { model: fit.model.clone(), standardization: Some(params.clone()) };
    arts.write("pcr_model.txt", model_file::pcr_to_string(&saved))?;
    arts.table("pcr_loadings.csv", |w| tables::write_loadings(w, &fit.basis, fit.model.k))?;
    arts.table("pcr_evr.csv", |w| tables::write_evr(w, &fit.basis))?;
    arts.table("pcr_cv.csv", |w| tables::write_fold_scores(w, &fit.cv.scores))?;
    Ok(())
}

pub fn write_cv_artifacts(arts: &mut Artifacts, report: &CvReport) -> Result<()> {
    arts.table("cv_results.csv", |w| tables::write_cv(w, report))?;
    arts.write("best_svr.toml", config::svr_section_toml(report.best_config()))?;
    Ok(())
}

pub fn write_adf_artifacts(arts: &mut Artifacts, results: &[FeatureStationarity]) -> Result<()> {
    arts.table("adf.csv", |w| tables::write_adf(w, results))?;
    arts.table("adf_summary.csv", |w| tables::write_adf_summary(w, results))?;
    Ok(())
}

pub fn write_importance(arts: &mut Artifacts, report: &ImportanceReport) -> Result<()> {
    let rows = importance::to_percentage_table(report, &feature_names());
    arts.table("importance.csv", |w| tables::write_importance(w, &rows))?;
    Ok(())
}

/// Loads a saved model and the panel it applies to, standardized with the
/// model's own parameters when it carries them.
pub fn load_model_and_rows(model_path: &Path, cfg: &RunConfig) -> Result<(SavedModel, Prepared)> {
    let saved = model_file::load_model(model_path)?;
    let raw = load_input(cfg)?;
    let prep = match saved.standardization() {
        Some(p) => prepare_with(raw, p.clone(), cfg)?,
        None => prepare(raw, cfg)?,
    };
    Ok((saved, prep))
}

/// Headline numbers of a full run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: PathBuf,
    pub svr_config: SvrConfig,
    pub cv: Option<CvReport>,
    pub svr_train: (f64, f64),
    pub svr_test: (f64, f64),
    pub pcr_k: usize,
    pub pcr_cv: FoldScores,
    pub pcr_test: (f64, f64),
    pub importance: ImportanceReport,
}

/// Runs every stage in order, writing artifacts under `cfg.output_dir`.
///
/// The manifest is written either way; on failure it is marked incomplete,
/// earlier artifacts are kept, and the error names the failed stage.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut arts = Artifacts::new(&cfg.output_dir)?;
    let mut stage = "load";
    match run_stages(cfg, &mut arts, &mut stage) {
        Ok(mut outcome) => {
            outcome.manifest = arts.write_manifest(None)?;
            Ok(outcome)
        }
        Err(e) => {
            arts.write_manifest(Some(stage))?;
            Err(PipelineError::Stage { stage, source: Box::new(e) })
        }
    }
}

fn run_stages(cfg: &RunConfig, arts: &mut Artifacts, stage: &mut &'static str) -> Result<RunOutcome> {
    *stage = "load";
    let raw = load_input(cfg)?;

    *stage = "standardize";
    let prep = prepare(raw, cfg)?;

    *stage = "adf";
    let adf = run_adf(&prep.raw, cfg)?;
    write_adf_artifacts(arts, &adf)?;

    let (svr_config, cv) = match &cfg.svr {
        Some(s) => (s.to_config(), None),
        None => {
            *stage = "grid-search";
            let report = grid_search(&prep, cfg)?;
            write_cv_artifacts(arts, &report)?;
            (*report.best_config(), Some(report))
        }
    };

    *stage = "train-svr";
    let svr_model = fit_svr(&prep, &svr_config)?;
    write_svr_model(arts, "svr_model.txt", &svr_config, &svr_model, &prep.params)?;

    *stage = "train-pcr";
    let pcr = fit_pcr(&prep, cfg.pcr.choice(), cfg)?;
    write_pcr_artifacts(arts, &pcr, &prep.params)?;

    *stage = "evaluate";
    let svr_train = score(&svr_model, &prep.train)?;
    let svr_test = score(&svr_model, &prep.test)?;
    let pcr_train = score(&pcr.model, &prep.train)?;
    let pcr_test = score(&pcr.model, &prep.test)?;
    let mut metrics = vec![
        MetricRow { model: "svr".into(), rows: "train".into(), r2: svr_train.0, mse: svr_train.1 },
        MetricRow { model: "svr".into(), rows: "test".into(), r2: svr_test.0, mse: svr_test.1 },
    ];
    if let Some(report) = &cv {
        let s = report.best_scores();
        metrics.push(MetricRow { model: "svr".into(), rows: "cv-mean".into(), r2: s.mean_r2, mse: s.mean_mse });
    }
    metrics.extend([
        MetricRow { model: "pcr".into(), rows: "train".into(), r2: pcr_train.0, mse: pcr_train.1 },
        MetricRow { model: "pcr".into(), rows: "test".into(), r2: pcr_test.0, mse: pcr_test.1 },
        MetricRow { model: "pcr".into(), rows: "cv-mean".into(), r2: pcr.cv.scores.mean_r2, mse: pcr.cv.scores.mean_mse },
    ]);
    arts.table("metrics.csv", |w| tables::write_metrics(w, &metrics))?;

    *stage = "importance";
    let importance = run_importance(&svr_model, &prep.test, cfg)?;
    write_importance(arts, &importance)?;

    *stage = "report";
    let (series, _) = country_reports(&svr_model, &prep.standardized, &prep.params)?;
    arts.table("report.csv", |w| tables::write_report(w, &series))?;

    *stage = "plots";
    let (_, scatter) = country_reports(&svr_model, &prep.test, &prep.params)?;
    arts.plots(&series, &scatter)?;

    Ok(RunOutcome {
        manifest: PathBuf::new(),
        svr_config,
        cv,
        svr_train,
        svr_test,
        pcr_k: pcr.model.k,
        pcr_cv: pcr.cv.scores,
        pcr_test,
        importance,
    })
}
