use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::data::Dataset;
use crate::strategies::{run, SearchConfig};

pub const DEFAULT_ALPHAS: [f64; 6] = [1.0, 0.1, 0.01, 0.001, 0.0001, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub loss: f64,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
    pub penalty: f64,
    pub layers: usize,
    pub coding_units: usize,
    pub hidden_layout: String,
    pub chromosome: String,
}

impl SweepEntry {
    /// `Layers × coding units`, the quantity the penalty scales.
    pub fn complexity(&self) -> usize {
        self.layers * self.coding_units
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub result: Result<SweepEntry, String>,
}

/// One full search per α, sorted by descending α. Every search uses the
/// seeds of `base`, so runs differ only through the penalty weight. A failed
/// search is reported in its row and does not stop the others.
pub fn sweep_alpha(dataset: &Dataset, base: &SearchConfig, alphas: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    if alphas.is_empty() {
        return Err(HarnessError::Usage("at least one alpha is required".into()));
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(|a, b| b.total_cmp(a));
    Ok(alphas
        .into_iter()
        .map(|alpha| {
            let cfg = SearchConfig {
                alpha,
                ..base.clone()
            };
            let result = run(dataset, &cfg).map_err(|e| e.to_string()).and_then(|out| {
                let best = out.best;
                let spec = best
                    .chromosome
                    .decode(dataset.feature_count())
                    .map_err(|_| "no valid architecture found".to_string())?;
                Ok(SweepEntry {
                    loss: best.fitness,
                    train_mse: best.train_mse.unwrap_or(f64::NAN),
                    test_mse: best.test_mse,
                    penalty: best.penalty,
                    layers: best.chromosome.hidden_pairs(),
                    coding_units: best.chromosome.coding_units(),
                    hidden_layout: spec.hidden_layout(),
                    chromosome: best.chromosome.to_string(),
                })
            });
            SweepRow { alpha, result }
        })
        .collect())
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    let io = |source: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record([
        "alpha", "loss", "train_mse", "test_mse", "penalty", "layers", "coding_units", "hidden_layout",
        "chromosome", "error",
    ])
    .map_err(|e| io(e.into()))?;
    for row in rows {
        let cells: Vec<String> = match &row.result {
            Ok(e) => vec![
                row.alpha.to_string(),
                e.loss.to_string(),
                e.train_mse.to_string(),
                e.test_mse.map(|v| v.to_string()).unwrap_or_default(),
                e.penalty.to_string(),
                e.layers.to_string(),
                e.coding_units.to_string(),
                e.hidden_layout.clone(),
                e.chromosome.clone(),
                String::new(),
            ],
            Err(msg) => {
                let mut v = vec![row.alpha.to_string()];
                v.extend(std::iter::repeat_n(String::new(), 8));
                v.push(msg.clone());
                v
            }
        };
        w.write_record(&cells).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
