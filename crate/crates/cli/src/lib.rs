//! Pipeline orchestration and the `acs` command line.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod table;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use pipeline::{run_pipeline, StageReport, Summary};
