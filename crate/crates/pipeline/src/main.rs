use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use co2_core::reporting::{generate_synthetic, SyntheticSpec};
use co2_pipeline::config::{ComponentChoice, RunConfig, StandardizeMode};
use co2_pipeline::pipeline::{self, Artifacts, RowSet};
use co2_pipeline::plots::sig6;
use co2_pipeline::{io, tables, PipelineError, Result};

/// Models national CO₂ emissions from socioeconomic indicators.
#[derive(Parser)]
#[command(name = "co2", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Panel CSV.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    test_fraction: Option<f64>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true, value_enum)]
    standardize: Option<StandardizeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StandardizeArg {
    Global,
    TrainOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum RowsArg {
    All,
    Train,
    Test,
}

impl From<RowsArg> for RowSet {
    fn from(r: RowsArg) -> Self {
        match r {
            RowsArg::All => RowSet::All,
            RowsArg::Train => RowSet::Train,
            RowsArg::Test => RowSet::Test,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a panel CSV and summarize it.
    IngestCheck,
    /// Per-country ADF tests of every feature.
    Adf,
    /// Cross-validated SVR grid search on the training rows.
    GridSearch,
    /// Fit the SVR on the training rows; uses `[svr]` if set, else the grid winner.
    TrainSvr,
    /// Fit PCR on the training rows.
    TrainPcr {
        /// Pin the number of components.
        #[arg(long, conflicts_with = "target_evr")]
        components: Option<usize>,
        /// Smallest k reaching this cumulative explained variance.
        #[arg(long)]
        target_evr: Option<f64>,
    },
    /// Score a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        rows: RowsArg,
    },
    /// Permutation importance of a saved model.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        rows: RowsArg,
        #[arg(long)]
        permutations: Option<usize>,
    },
    /// Per-country actual-vs-predicted tables and plots.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        rows: RowsArg,
    },
    /// Generate the synthetic panel (seeded by --seed).
    Synth {
        #[arg(long, default_value_t = 62)]
        countries: usize,
        /// Make this feature a random walk; repeatable.
        #[arg(long = "unit-root")]
        unit_root: Vec<usize>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Every stage end to end, with a manifest of artifact hashes.
    Run,
}

fn build_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &g.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &g.out {
        cfg.output_dir = p.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(f) = g.test_fraction {
        cfg.split.test_fraction = f;
    }
    if let Some(k) = g.folds {
        cfg.folds = k;
    }
    if let Some(s) = g.standardize {
        cfg.standardize = match s {
            StandardizeArg::Global => StandardizeMode::Global,
            StandardizeArg::TrainOnly => StandardizeMode::TrainOnly,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn say(line: String) {
    println!("{line}");
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = build_config(&cli.global)?;
    match cli.command {
        Command::IngestCheck => {
            let panel = pipeline::load_input(&cfg)?;
            let (first, last) = panel.years();
            say(format!("{} rows, {} countries, years {first}-{last}", panel.len(), panel.countries().len()));
        }
        Command::Adf => {
            let panel = pipeline::load_input(&cfg)?;
            let results = pipeline::run_adf(&panel, &cfg)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            pipeline::write_adf_artifacts(&mut arts, &results)?;
            for f in &results {
                let verdict = if f.stationary { "stationary" } else { "non-stationary" };
                say(format!("{}: {verdict} ({} of countries)", f.feature.name, sig6(f.stationary_fraction)));
            }
        }
        Command::GridSearch => {
            let prep = pipeline::prepare(pipeline::load_input(&cfg)?, &cfg)?;
            let report = pipeline::grid_search(&prep, &cfg)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            pipeline::write_cv_artifacts(&mut arts, &report)?;
            let best = report.best_config();
            say(format!(
                "best: kernel {} C {} gamma {} degree {}, mean R² {}",
                best.kernel.kind.name(),
                sig6(best.c),
                best.kernel.gamma.name(),
                best.kernel.degree,
                sig6(report.best_scores().mean_r2)
            ));
        }
        Command::TrainSvr => {
            let prep = pipeline::prepare(pipeline::load_input(&cfg)?, &cfg)?;
            let svr_cfg = match &cfg.svr {
                Some(s) => s.to_config(),
                None => *pipeline::grid_search(&prep, &cfg)?.best_config(),
            };
            let model = pipeline::fit_svr(&prep, &svr_cfg)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            let path = pipeline::write_svr_model(&mut arts, "svr_model.txt", &svr_cfg, &model, &prep.params)?;
            let d = model.diagnostics;
            say(format!(
                "{} support vectors, {} iterations, converged {}; wrote {}",
                model.beta.len(),
                d.iterations,
                d.converged,
                path.display()
            ));
        }
        Command::TrainPcr { components, target_evr } => {
            let choice = match (components, target_evr) {
                (Some(k), _) => ComponentChoice::Fixed(k),
                (None, Some(t)) => ComponentChoice::TargetEvr(t),
                (None, None) => cfg.pcr.choice(),
            };
            let prep = pipeline::prepare(pipeline::load_input(&cfg)?, &cfg)?;
            let fit = pipeline::fit_pcr(&prep, choice, &cfg)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            pipeline::write_pcr_artifacts(&mut arts, &fit, &prep.params)?;
            let cum = fit.basis.cumulative_evr()[fit.model.k - 1];
            say(format!(
                "k {} (cumulative EVR {}), {}-fold mean R² {}",
                fit.model.k,
                sig6(cum),
                cfg.folds,
                sig6(fit.cv.scores.mean_r2)
            ));
        }
        Command::Evaluate { model, rows } => {
            let (saved, prep) = pipeline::load_model_and_rows(&model, &cfg)?;
            let (r2, mse) = pipeline::score(saved.predictor(), &prep.rows(rows.into()))?;
            say(format!("R² {r2:.4}, MSE {mse:.4}"));
        }
        Command::Importance { model, rows, permutations } => {
            if let Some(l) = permutations {
                cfg.importance.n_permutations = l;
                cfg.validate()?;
            }
            let (saved, prep) = pipeline::load_model_and_rows(&model, &cfg)?;
            let report = pipeline::run_importance(saved.predictor(), &prep.rows(rows.into()), &cfg)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            pipeline::write_importance(&mut arts, &report)?;
            let names = pipeline::feature_names();
            for (rank, &j) in report.ranking.iter().enumerate() {
                let f = &report.per_feature[j];
                say(format!("{:>2}. {}: {}% ± {}", rank + 1, names[j], sig6(100.0 * f.importance), sig6(100.0 * f.std)));
            }
        }
        Command::Report { model, rows } => {
            let (saved, prep) = pipeline::load_model_and_rows(&model, &cfg)?;
            let subset = prep.rows(rows.into());
            let (series, scatter) = pipeline::country_reports(saved.predictor(), &subset, &prep.params)?;
            let mut arts = Artifacts::new(&cfg.output_dir)?;
            arts.table("report.csv", |w| tables::write_report(w, &series))?;
            arts.plots(&series, &scatter)?;
            say(format!("{} countries, {} files written to {}", series.len(), arts.files().len(), cfg.output_dir.display()));
        }
        Command::Synth { countries, unit_root, output } => {
            let spec = SyntheticSpec { n_countries: countries, seed: cfg.seed, unit_root_features: unit_root, ..Default::default() };
            let panel = generate_synthetic(&spec)?;
            match output {
                Some(path) => io::save_panel(&path, &panel)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    io::write_panel(&mut lock, &panel)?;
                    lock.flush().map_err(|e| PipelineError::Io { path: "<stdout>".into(), source: e })?;
                }
            }
        }
        Command::Run => {
            let o = co2_pipeline::run_pipeline(&cfg)?;
            let c = o.svr_config;
            say(format!("SVR: kernel {} C {} gamma {} degree {}", c.kernel.kind.name(), sig6(c.c), c.kernel.gamma.name(), c.kernel.degree));
            say(format!("SVR test R² {}, MSE {}", sig6(o.svr_test.0), sig6(o.svr_test.1)));
            say(format!("PCR k {}: {}-fold mean R² {}, test R² {}", o.pcr_k, cfg.folds, sig6(o.pcr_cv.mean_r2), sig6(o.pcr_test.0)));
            let names = pipeline::feature_names();
            say(format!("most important feature: {}", names[o.importance.ranking[0]]));
            say(format!("manifest: {}", o.manifest.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // every error's message already embeds its cause
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
