use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, friedman_test, rank_methods, run_search, write_json, Friedman, HarnessError, Ranking, RunConfig};
use crate::data::{LoadOptions, DEFAULT_TEST_FRACTION};
use crate::seed::mix_seed;
use crate::strategies::{SearchConfig, Strategy};

/// Every dataset crossed with every strategy. Per-strategy population and
/// iteration defaults apply; the remaining settings come from `template`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub datasets: Vec<PathBuf>,
    pub strategies: Vec<Strategy>,
    pub load: LoadOptions,
    pub template: SearchConfig,
    pub out_dir: PathBuf,
    /// Run cells concurrently, each in its own directory.
    pub parallel: bool,
}

impl ExperimentPlan {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.datasets.is_empty() || self.strategies.is_empty() {
            return Err(HarnessError::Usage("a plan needs at least one dataset and one strategy".into()));
        }
        let names: HashSet<String> = self.datasets.iter().map(|p| dataset_name(p)).collect();
        let strategies: HashSet<Strategy> = self.strategies.iter().copied().collect();
        if names.len() != self.datasets.len() || strategies.len() != self.strategies.len() {
            return Err(HarnessError::Usage("dataset/strategy pairs must be unique".into()));
        }
        Ok(())
    }

    /// Run configuration of one cell. The split seed depends only on the
    /// dataset, so every strategy sees the same partition.
    pub fn cell_config(&self, dataset: usize, strategy: usize) -> RunConfig {
        let s = self.strategies[strategy];
        let t = &self.template;
        let defaults = SearchConfig::defaults_for(s);
        let master = t.master_seed;
        RunConfig {
            dataset: self.datasets[dataset].clone(),
            load: self.load.clone(),
            test_fraction: DEFAULT_TEST_FRACTION,
            split_seed: mix_seed(master, dataset as u64),
            search: SearchConfig {
                strategy: s,
                population_size: defaults.population_size,
                iterations: defaults.iterations,
                master_seed: mix_seed(master, ((dataset as u64) << 16) | strategy as u64 | 0x1_0000_0000),
                ..t.clone()
            },
        }
    }

    fn cell_dir(&self, dataset: usize, strategy: usize) -> PathBuf {
        self.out_dir
            .join(dataset_name(&self.datasets[dataset]))
            .join(self.strategies[strategy].name())
    }
}

fn dataset_name(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub strategy: Strategy,
    pub evaluations: u64,
    pub layers: usize,
    pub coding_units: usize,
    /// `alpha × layers × coding_units` of the best record.
    pub complexity: f64,
    /// Best penalised training fitness.
    pub fitness: f64,
    pub best_train_mse: Option<f64>,
    pub best_test_mse: Option<f64>,
    pub best_test_mse_penalized: Option<f64>,
    /// Mean test MSE over all valid records.
    pub average_test_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub datasets: Vec<String>,
    pub strategies: Vec<Strategy>,
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn cell(&self, dataset: &str, strategy: Strategy) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.dataset == dataset && c.strategy == strategy)
    }

    /// `[dataset][strategy]` best raw test MSE; NaN marks a missing value.
    pub fn error_matrix(&self) -> Vec<Vec<f64>> {
        self.datasets
            .iter()
            .map(|d| {
                self.strategies
                    .iter()
                    .map(|&s| self.cell(d, s).and_then(|c| c.best_test_mse).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let io = |source: std::io::Error| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        };
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        w.write_record([
            "dataset", "strategy", "evaluations", "layers", "coding_units", "complexity", "fitness",
            "best_train_mse", "best_test_mse", "best_test_mse_penalized", "average_test_mse",
        ])
        .map_err(|e| io(e.into()))?;
        for c in &self.cells {
            w.write_record([
                c.dataset.clone(),
                c.strategy.to_string(),
                c.evaluations.to_string(),
                c.layers.to_string(),
                c.coding_units.to_string(),
                c.complexity.to_string(),
                c.fitness.to_string(),
                opt(c.best_train_mse),
                opt(c.best_test_mse),
                opt(c.best_test_mse_penalized),
                opt(c.average_test_mse),
            ])
            .map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)
    }
}

fn run_cell(plan: &ExperimentPlan, dataset: usize, strategy: usize) -> Result<CellResult, HarnessError> {
    let cfg = plan.cell_config(dataset, strategy);
    let (outcome, _) = run_search(&cfg, &plan.cell_dir(dataset, strategy))?;
    let best = &outcome.best;
    let tests: Vec<f64> = outcome
        .trajectory
        .iter()
        .filter(|r| r.valid)
        .filter_map(|r| r.test_mse)
        .collect();
    Ok(CellResult {
        dataset: dataset_name(&plan.datasets[dataset]),
        strategy: plan.strategies[strategy],
        evaluations: outcome.evaluations,
        layers: best.chromosome.hidden_pairs(),
        coding_units: best.chromosome.coding_units(),
        complexity: best.penalty,
        fitness: best.fitness,
        best_train_mse: best.train_mse,
        best_test_mse: best.test_mse,
        best_test_mse_penalized: best.test_mse.map(|t| t + best.penalty),
        average_test_mse: (!tests.is_empty()).then(|| tests.iter().sum::<f64>() / tests.len() as f64),
    })
}

/// Runs the plan, then ranks strategies and applies the Friedman test on the
/// best raw test MSE per cell. Writes `results.csv`, `ranking.csv` and
/// `friedman.json` into the plan's output directory.
pub fn compare(plan: &ExperimentPlan) -> Result<(ResultTable, Ranking, Option<Friedman>), HarnessError> {
    plan.validate()?;
    create_dir(&plan.out_dir)?;
    let cells: Vec<(usize, usize)> = (0..plan.datasets.len())
        .flat_map(|d| (0..plan.strategies.len()).map(move |s| (d, s)))
        .collect();
    let results: Vec<CellResult> = if plan.parallel {
        cells
            .par_iter()
            .map(|&(d, s)| run_cell(plan, d, s))
            .collect::<Result<_, _>>()?
    } else {
        cells
            .iter()
            .map(|&(d, s)| run_cell(plan, d, s))
            .collect::<Result<_, _>>()?
    };
    let table = ResultTable {
        datasets: plan.datasets.iter().map(|p| dataset_name(p)).collect(),
        strategies: plan.strategies.clone(),
        cells: results,
    };
    table.write_csv(&plan.out_dir.join("results.csv"))?;

    let matrix = table.error_matrix();
    let ranking = rank_methods(&matrix)?;
    let path = plan.out_dir.join("ranking.csv");
    let io = |source: std::io::Error| HarnessError::Io {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(e.into()))?;
    let mut header = vec!["dataset".to_string()];
    header.extend(table.strategies.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| io(e.into()))?;
    for (name, ranks) in table.datasets.iter().zip(&ranking.ranks).chain(std::iter::once((&"average".to_string(), &ranking.average))) {
        let mut row = vec![name.clone()];
        row.extend(ranks.iter().map(|r| r.to_string()));
        w.write_record(&row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)?;

    let friedman = if table.datasets.len() >= 2 && table.strategies.len() >= 2 {
        let f = friedman_test(&matrix)?;
        write_json(&plan.out_dir.join("friedman.json"), &f)?;
        Some(f)
    } else {
        None
    };
    Ok((table, ranking, friedman))
}
