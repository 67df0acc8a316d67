//! File formats, plots and the pipeline driver around `co2-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod model_file;
pub mod pipeline;
pub mod plots;
pub mod tables;

pub use config::RunConfig;
pub use error::{PipelineError, Result};
pub use pipeline::{run_pipeline, RunOutcome};
