//! Configuration, study orchestration and result files for the `acmag`
//! binary.

pub mod config;
pub mod output;
pub mod studies;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{study} failed: {source}")]
    Numerical {
        study: &'static str,
        #[source]
        source: acmag_core::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(field: &str, reason: &str) -> Self {
        CliError::Config(format!("invalid value for `{field}`: {reason}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyCommand {
    QfimScan,
    Convergence,
    Bounds,
    ProbeSearch,
    NvSweep,
    NvScaling,
    Adaptive,
}

impl StudyCommand {
    pub fn name(self) -> &'static str {
        match self {
            StudyCommand::QfimScan => "qfim-scan",
            StudyCommand::Convergence => "convergence",
            StudyCommand::Bounds => "bounds",
            StudyCommand::ProbeSearch => "probe-search",
            StudyCommand::NvSweep => "nv-sweep",
            StudyCommand::NvScaling => "nv-scaling",
            StudyCommand::Adaptive => "adaptive",
        }
    }
}

/// Runs `command` and writes its table and summary into `out_dir`.
/// Nothing is written when the study fails.
pub fn run(command: StudyCommand, cfg: &RunConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let study = studies::execute(command, cfg)?;
    let summary = serde_json::json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg)?,
        "results": study.results,
    });
    output::emit_results(&study.table, &summary, out_dir, command.name())
}
