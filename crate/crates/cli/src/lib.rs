//! Experiment runner for the PICO sentence classifier: corpus statistics,
//! training, the n-gram and penalty sweeps, cross-validation and batch
//! prediction.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{
    best_c, evaluate_tasks, load_corpus, predict, stats, sweep_c, sweep_ngram, CRow, LoadedCorpus,
    SweepRow, TaskEvaluation,
};
pub use config::{ConfigLayer, RunConfig};
pub use report::Report;

use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pico_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Core(pico_core::Error::NotConverged { .. }) => 3,
            CliError::Core(_) | CliError::Output { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            3 => "not_converged",
            _ => "data",
        }
    }

    /// Single-line JSON error record for the diagnostic stream.
    pub fn record(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
