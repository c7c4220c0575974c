use std::path::Path;

use super::HarnessError;
use crate::fitness::read_solutions;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryExport {
    /// `(elapsed_ms, fitness)` for every valid row.
    pub time_series: Vec<(i64, f64)>,
    /// `(eval_index, best_so_far)` for every valid row.
    pub best_so_far: Vec<(u64, f64)>,
}

impl TrajectoryExport {
    /// Best fitness recomputed from the log.
    pub fn best(&self) -> Option<f64> {
        self.best_so_far.last().map(|&(_, b)| b)
    }
}

/// Reads `run_dir/solutions.csv` and writes `time_series.csv`
/// (`elapsed_ms,fitness`) and `best_so_far.csv` (`eval_index,best_so_far`)
/// next to it. Elapsed time is measured from the first logged row.
pub fn export_trajectories(run_dir: &Path) -> Result<TrajectoryExport, HarnessError> {
    let rows = read_solutions(&run_dir.join("solutions.csv"))?;
    let start = rows.first().map(|r| r.timestamp);
    let mut time_series = Vec::new();
    let mut best_so_far = Vec::new();
    let mut best = f64::INFINITY;
    for r in rows.iter().filter(|r| r.valid) {
        let elapsed = start.map_or(0, |s| (r.timestamp - s).num_milliseconds());
        time_series.push((elapsed, r.fitness));
        best = best.min(r.fitness);
        best_so_far.push((r.eval_index, best));
    }
    write_pairs(&run_dir.join("time_series.csv"), ["elapsed_ms", "fitness"], &time_series)?;
    write_pairs(&run_dir.join("best_so_far.csv"), ["eval_index", "best_so_far"], &best_so_far)?;
    Ok(TrajectoryExport {
        time_series,
        best_so_far,
    })
}

fn write_pairs<A: ToString, B: ToString>(path: &Path, header: [&str; 2], rows: &[(A, B)]) -> Result<(), HarnessError> {
    let io = |source: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(header).map_err(|e| io(e.into()))?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()]).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
