//! Experiment orchestration: single runs, α sweeps, multi-strategy
//! comparisons and the statistics and exports built on their logs.

mod compare;
mod export;
mod run;
mod stats;
mod sweep;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::fitness::LogError;
use crate::strategies::SearchError;

pub use compare::{compare, CellResult, ExperimentPlan, ResultTable};
pub use export::{export_trajectories, TrajectoryExport};
pub use run::{run_search, BestReport, RunConfig, BEST_SCHEMA};
pub use stats::{friedman_test, rank_methods, rank_row, Friedman, Ranking};
pub use sweep::{sweep_alpha, write_sweep_csv, SweepEntry, SweepRow, DEFAULT_ALPHAS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("dataset: {0}")]
    Dataset(#[from] DataError),
    #[error("output directory {path}: {source}")]
    OutDir { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("{0}")]
    Table(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl HarnessError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Dataset(_) => 3,
            HarnessError::OutDir { .. } => 4,
            HarnessError::Log(_) => 5,
            _ => 1,
        }
    }
}

pub(crate) fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(path: &std::path::Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::OutDir {
        path: path.to_path_buf(),
        source,
    })
}
