use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{create_dir, write_json, HarnessError};
use crate::data::{load_csv, split, Dataset, LoadOptions, DEFAULT_TEST_FRACTION};
use crate::fitness::{FitnessRecord, SolutionsLog};
use crate::genome::ArchitectureSpec;
use crate::neural::{train, ModelExport};
use crate::seed::chromosome_seed;
use crate::strategies::{run_logged, SearchConfig, SearchOutcome, StopReason};

pub const BEST_SCHEMA: &str = "evoaaa-best/1";

/// Everything needed to reproduce a run; written as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub load: LoadOptions,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub search: SearchConfig,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, search: SearchConfig) -> Self {
        Self {
            dataset: dataset.into(),
            load: LoadOptions::default(),
            test_fraction: DEFAULT_TEST_FRACTION,
            split_seed: search.master_seed,
            search,
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset, HarnessError> {
        let d = load_csv(&self.dataset, &self.load)?;
        Ok(split(&d, self.test_fraction, self.split_seed)?)
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Contents of `best.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestReport {
    pub schema: String,
    pub dataset: String,
    pub strategy: String,
    pub chromosome: String,
    pub architecture: Option<ArchitectureSpec>,
    pub hidden_layout: Option<String>,
    pub layers: usize,
    pub coding_units: usize,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub penalty: f64,
    /// Absent when no valid individual was found.
    pub fitness: Option<f64>,
    pub evaluations: u64,
    pub generated: usize,
    pub wall_time_s: f64,
    pub stop_reason: StopReason,
}

impl BestReport {
    pub fn new(dataset: &Dataset, outcome: &SearchOutcome) -> Self {
        let best: &FitnessRecord = &outcome.best;
        let architecture = best.chromosome.decode(dataset.feature_count()).ok();
        Self {
            schema: BEST_SCHEMA.to_string(),
            dataset: dataset.name.clone(),
            strategy: best.strategy_tag.clone(),
            chromosome: best.chromosome.to_string(),
            hidden_layout: architecture.as_ref().map(ArchitectureSpec::hidden_layout),
            architecture,
            layers: best.chromosome.hidden_pairs(),
            coding_units: best.chromosome.coding_units(),
            train_mse: best.train_mse,
            test_mse: best.test_mse,
            penalty: best.penalty,
            fitness: Some(best.fitness).filter(|f| f.is_finite()),
            evaluations: outcome.evaluations,
            generated: outcome.trajectory.len(),
            wall_time_s: outcome.elapsed.as_secs_f64(),
            stop_reason: outcome.stop_reason,
        }
    }
}

/// Runs one search and writes `config.json`, `solutions.csv`, `best.json`
/// and, when the best individual is valid, `best_model.json` into `out`.
pub fn run_search(cfg: &RunConfig, out: &Path) -> Result<(SearchOutcome, BestReport), HarnessError> {
    cfg.search.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
    let dataset = cfg.load_dataset()?;
    create_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let log_path = out.join("solutions.csv");
    let log = SolutionsLog::create(&log_path).map_err(|source| HarnessError::OutDir {
        path: log_path.clone(),
        source,
    })?;
    let outcome = run_logged(&dataset, &cfg.search, Some(log))?;
    let report = BestReport::new(&dataset, &outcome);
    write_json(&out.join("best.json"), &report)?;
    if let Some(spec) = &report.architecture {
        // Same seed as during the search, so this reproduces the scored model.
        let seed = chromosome_seed(cfg.search.master_seed, &outcome.best.chromosome);
        if let Ok(trained) = train(spec, &dataset.train_matrix(), &cfg.search.train, seed) {
            write_json(
                &out.join("best_model.json"),
                &ModelExport::new(spec, &trained.params, trained.train_mse),
            )?;
        }
    }
    Ok((outcome, report))
}
