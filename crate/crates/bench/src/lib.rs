//! Experiment runner for the stochastic Newton estimators: plan files,
//! seeded replications, metric curves and their CSV, SVG and JSON output.

use std::path::Path;

use thiserror::Error;

pub mod fetch;
pub mod metrics;
pub mod output;
pub mod plan;
pub mod runner;

pub use plan::{AlgorithmEntry, ExperimentPlan, Metric, ModelSpec, Overrides};
pub use runner::{Experiment, RunRecord};

#[derive(Debug, Error)]
pub enum BenchError {
    /// Invalid plan or inputs; exit code 2.
    #[error("{0}")]
    Plan(String),
    /// Read, write or download failure; exit code 4.
    #[error("{0}")]
    Io(String),
}

impl BenchError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Plan(_) => 2,
            Self::Io(_) => 4,
        }
    }
}

/// Exit code when some algorithm failed in more than the allowed share of
/// replications.
pub const EXIT_BUDGET: u8 = 3;

/// Writes `curves.csv`, `curves.svg` and `record.json` into `dir`.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    output::emit_csv(record, &dir.join("curves.csv"))?;
    output::emit_svg(record, &dir.join("curves.svg"))?;
    output::emit_json(record, &dir.join("record.json"))
}
