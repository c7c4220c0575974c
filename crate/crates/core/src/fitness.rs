//! Scoring of individuals: validate, decode, train, penalise, log.
//!
//! Fitness is the final training MSE plus `alpha * layers * coding_units`.
//! Invalid and failed individuals get an infinite fitness so population
//! strategies can still rank them.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::genome::{Chromosome, ComplexityTerm, GeneBounds, GENE_COUNT};
use crate::neural::{reconstruction_mse, train, TrainConfig};
use crate::seed::chromosome_seed;

#[derive(Debug, Error)]
pub enum FitnessError {
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error("dataset has no training rows")]
    EmptyTrainingSet,
    #[error(transparent)]
    Genome(#[from] crate::genome::GenomeError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("solutions log: {0}")]
    Log(#[from] io::Error),
}

/// `alpha × layers × coding_units`.
pub fn penalty(layers: usize, coding_units: usize, alpha: f64) -> f64 {
    ComplexityTerm {
        layers,
        coding_units,
        alpha,
    }
    .value()
}

/// One evaluated individual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitnessRecord {
    pub chromosome: Chromosome,
    pub valid: bool,
    /// Training diverged; only meaningful for valid records.
    pub failed: bool,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub penalty: f64,
    /// `train_mse + penalty`, or `+inf` for invalid and failed individuals.
    pub fitness: f64,
    pub eval_index: u64,
    pub wall_time_ms: u64,
    pub strategy_tag: String,
    pub timestamp: String,
}

impl FitnessRecord {
    /// Counts towards the evaluation budget.
    pub fn is_evaluated(&self) -> bool {
        self.valid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    #[serde(with = "duration_secs")]
    pub max_wall_clock: Duration,
    pub max_evaluations: Option<u64>,
    pub termination_cost: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_wall_clock: Duration::from_secs(600),
            max_evaluations: Some(500),
            termination_cost: 0.0,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self {
            max_wall_clock: Duration::from_secs(u64::MAX / 4),
            max_evaluations: None,
            termination_cost: 0.0,
        }
    }

    fn exhausted(&self, elapsed: Duration, evaluations: u64) -> bool {
        elapsed >= self.max_wall_clock || self.max_evaluations.is_some_and(|m| evaluations >= m)
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

pub fn should_terminate(best_fitness: f64, elapsed: Duration, evaluations: u64, budget: &Budget) -> bool {
    best_fitness <= budget.termination_cost || budget.exhausted(elapsed, evaluations)
}

/// Settings shared by every evaluation of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub alpha: f64,
    pub train: TrainConfig,
    pub master_seed: u64,
    pub memoize: bool,
    pub workers: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            alpha: 0.0001,
            train: TrainConfig::default(),
            master_seed: 0,
            memoize: true,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    train_mse: Option<f64>,
    test_mse: Option<f64>,
    millis: u64,
}

#[derive(Default)]
struct Ledger {
    next_index: u64,
    evaluated: u64,
    memo: HashMap<Chromosome, Outcome>,
    records: Vec<FitnessRecord>,
}

enum Slot {
    Invalid,
    Cached(Outcome),
    Train(usize),
}

/// Result of evaluating a batch: the records actually produced, in
/// `eval_index` order, and whether the budget cut the batch short.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub records: Vec<FitnessRecord>,
    pub exhausted: bool,
}

/// Stateful evaluator for one search run. Safe to share; indices and the
/// record log are guarded by a mutex while trainings run on a worker pool.
pub struct Evaluator {
    bounds: GeneBounds,
    train: Array2<f64>,
    test: Array2<f64>,
    settings: EvalSettings,
    budget: Budget,
    strategy_tag: String,
    started: Instant,
    pool: rayon::ThreadPool,
    ledger: Mutex<Ledger>,
    log: Option<Mutex<SolutionsLog>>,
}

impl Evaluator {
    pub fn new(dataset: &Dataset, settings: EvalSettings, budget: Budget, strategy_tag: &str) -> Result<Self, FitnessError> {
        if dataset.train_indices.is_empty() {
            return Err(FitnessError::EmptyTrainingSet);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers.max(1))
            .build()
            .map_err(|e| FitnessError::Pool(e.to_string()))?;
        Ok(Self {
            bounds: GeneBounds::for_features(dataset.feature_count())?,
            train: dataset.train_matrix(),
            test: dataset.test_matrix(),
            settings,
            budget,
            strategy_tag: strategy_tag.to_string(),
            started: Instant::now(),
            pool,
            ledger: Mutex::new(Ledger::default()),
            log: None,
        })
    }

    /// Streams every record to `log` as batches complete.
    pub fn with_log(mut self, log: SolutionsLog) -> Self {
        self.log = Some(Mutex::new(log));
        self
    }

    pub fn bounds(&self) -> &GeneBounds {
        &self.bounds
    }

    pub fn settings(&self) -> &EvalSettings {
        &self.settings
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    /// Valid individuals scored so far (cache hits included, invalid excluded).
    pub fn evaluations(&self) -> u64 {
        self.ledger.lock().unwrap().evaluated
    }

    pub fn records(&self) -> Vec<FitnessRecord> {
        self.ledger.lock().unwrap().records.clone()
    }

    pub fn budget_exhausted(&self) -> bool {
        self.budget.exhausted(self.elapsed(), self.evaluations())
    }

    pub fn evaluate(&self, c: &Chromosome) -> Result<FitnessRecord, FitnessError> {
        let mut out = self.evaluate_batch(std::slice::from_ref(c))?;
        out.records.pop().ok_or(FitnessError::BudgetExhausted)
    }

    /// Scores `batch` in order until the budget runs out. Indices are handed
    /// out sequentially before any training starts, and training seeds depend
    /// only on the genes, so results do not depend on the worker count.
    pub fn evaluate_batch(&self, batch: &[Chromosome]) -> Result<BatchOutcome, FitnessError> {
        let mut slots = Vec::with_capacity(batch.len());
        let mut pending: Vec<Chromosome> = Vec::new();
        let mut pending_at: HashMap<Chromosome, usize> = HashMap::new();
        let mut exhausted = false;
        let first_index;
        {
            let mut ledger = self.ledger.lock().unwrap();
            first_index = ledger.next_index;
            for c in batch {
                if self.budget.exhausted(self.elapsed(), ledger.evaluated) {
                    exhausted = true;
                    break;
                }
                ledger.next_index += 1;
                if !c.is_valid() {
                    slots.push(Slot::Invalid);
                    continue;
                }
                ledger.evaluated += 1;
                if self.settings.memoize {
                    if let Some(hit) = ledger.memo.get(c) {
                        slots.push(Slot::Cached(Outcome { millis: 0, ..*hit }));
                        continue;
                    }
                    if let Some(&at) = pending_at.get(c) {
                        slots.push(Slot::Train(at));
                        continue;
                    }
                    pending_at.insert(*c, pending.len());
                }
                slots.push(Slot::Train(pending.len()));
                pending.push(*c);
            }
        }

        let trained: Vec<Outcome> = self
            .pool
            .install(|| pending.par_iter().map(|c| self.train_one(c)).collect());

        let mut ledger = self.ledger.lock().unwrap();
        if self.settings.memoize {
            for (c, o) in pending.iter().zip(&trained) {
                ledger.memo.insert(*c, *o);
            }
        }
        let mut seen_training = vec![false; trained.len()];
        let records: Vec<FitnessRecord> = batch
            .iter()
            .zip(slots)
            .enumerate()
            .map(|(i, (c, slot))| {
                let outcome = match slot {
                    Slot::Invalid => None,
                    Slot::Cached(o) => Some(o),
                    Slot::Train(at) => {
                        let mut o = trained[at];
                        if std::mem::replace(&mut seen_training[at], true) {
                            o.millis = 0;
                        }
                        Some(o)
                    }
                };
                self.record(c, outcome, first_index + i as u64)
            })
            .collect();
        ledger.records.extend(records.iter().cloned());
        drop(ledger);
        if let Some(log) = &self.log {
            log.lock().unwrap().append(&records)?;
        }
        Ok(BatchOutcome { records, exhausted })
    }

    fn train_one(&self, c: &Chromosome) -> Outcome {
        let started = Instant::now();
        let seed = chromosome_seed(self.settings.master_seed, c);
        let result = c
            .decode(self.bounds.features())
            .ok()
            .and_then(|spec| {
                let report = train(&spec, &self.train, &self.settings.train, seed).ok()?;
                let test = if self.test.nrows() == 0 {
                    None
                } else {
                    Some(reconstruction_mse(&report.params, &spec, &self.test).ok()?)
                };
                Some((report.train_mse, test))
            });
        let millis = started.elapsed().as_millis() as u64;
        match result {
            Some((train_mse, test_mse)) => Outcome {
                train_mse: Some(train_mse),
                test_mse,
                millis,
            },
            None => Outcome {
                train_mse: None,
                test_mse: None,
                millis,
            },
        }
    }

    fn record(&self, c: &Chromosome, outcome: Option<Outcome>, eval_index: u64) -> FitnessRecord {
        let pen = penalty(c.hidden_pairs(), c.coding_units(), self.settings.alpha);
        let (valid, failed, train_mse, test_mse, millis) = match outcome {
            None => (false, false, None, None, 0),
            Some(o) => (true, o.train_mse.is_none(), o.train_mse, o.test_mse, o.millis),
        };
        FitnessRecord {
            chromosome: *c,
            valid,
            failed,
            train_mse,
            test_mse,
            penalty: pen,
            fitness: train_mse.map_or(f64::INFINITY, |m| m + pen),
            eval_index,
            wall_time_ms: millis,
            strategy_tag: self.strategy_tag.clone(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }
}

/// Scores one chromosome outside of a search.
pub fn evaluate(c: &Chromosome, dataset: &Dataset, settings: &EvalSettings) -> Result<FitnessRecord, FitnessError> {
    Evaluator::new(dataset, settings.clone(), Budget::unlimited(), "single")?.evaluate(c)
}

pub const SOLUTIONS_HEADER: [&str; 24] = [
    "eval_index", "timestamp", "strategy", "g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8", "g9",
    "g10", "g11", "g12", "g13", "g14", "g15", "valid", "train_mse", "test_mse", "penalty",
    "fitness", "train_ms",
];

/// Append-only CSV with one row per record and a fixed column order.
pub struct SolutionsLog {
    out: csv::Writer<BufWriter<File>>,
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SolutionsLog {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        out.write_record(SOLUTIONS_HEADER)?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn append(&mut self, records: &[FitnessRecord]) -> io::Result<()> {
        for r in records {
            let mut row = vec![r.eval_index.to_string(), r.timestamp.clone(), r.strategy_tag.clone()];
            row.extend(r.chromosome.genes().iter().map(u32::to_string));
            row.extend([
                r.valid.to_string(),
                opt_cell(r.train_mse),
                opt_cell(r.test_mse),
                r.penalty.to_string(),
                r.fitness.to_string(),
                r.wall_time_ms.to_string(),
            ]);
            self.out.write_record(&row)?;
        }
        self.out.flush()
    }
}

/// One parsed row of a solutions log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedSolution {
    pub eval_index: u64,
    pub timestamp: chrono::DateTime<chrono::FixedOffset>,
    pub strategy: String,
    pub genes: [u32; GENE_COUNT],
    pub valid: bool,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub penalty: f64,
    pub fitness: f64,
    pub train_ms: u64,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: csv::Error },
    #[error("{path} row {row}: {message}")]
    Malformed { path: String, row: usize, message: String },
}

fn cell<T: std::str::FromStr>(r: &csv::StringRecord, j: usize) -> Result<T, String> {
    let raw = r.get(j).unwrap_or_default();
    raw.parse()
        .map_err(|_| format!("column {} has unparseable value '{raw}'", SOLUTIONS_HEADER[j]))
}

fn parse_row(r: &csv::StringRecord) -> Result<LoggedSolution, String> {
    if r.len() != SOLUTIONS_HEADER.len() {
        return Err(format!("expected {} cells, found {}", SOLUTIONS_HEADER.len(), r.len()));
    }
    let opt = |j: usize| -> Result<Option<f64>, String> {
        if r[j].is_empty() {
            Ok(None)
        } else {
            cell(r, j).map(Some)
        }
    };
    let mut genes = [0u32; GENE_COUNT];
    for (k, g) in genes.iter_mut().enumerate() {
        *g = cell(r, 3 + k)?;
    }
    Ok(LoggedSolution {
        eval_index: cell(r, 0)?,
        timestamp: chrono::DateTime::parse_from_rfc3339(&r[1]).map_err(|e| format!("bad timestamp: {e}"))?,
        strategy: r[2].to_string(),
        genes,
        valid: cell(r, 18)?,
        train_mse: opt(19)?,
        test_mse: opt(20)?,
        penalty: cell(r, 21)?,
        fitness: cell(r, 22)?,
        train_ms: cell(r, 23)?,
    })
}

pub fn read_solutions(path: &Path) -> Result<Vec<LoggedSolution>, LogError> {
    let name = path.display().to_string();
    let io = |source: csv::Error| LogError::Io {
        path: name.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(io)?;
    let header = reader.headers().map_err(io)?.clone();
    if header.iter().ne(SOLUTIONS_HEADER) {
        return Err(LogError::Malformed {
            path: name,
            row: 1,
            message: "missing or unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(io)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        out.push(parse_row(&record).map_err(|message| LogError::Malformed {
            path: name.clone(),
            row,
            message,
        })?);
    }
    Ok(out)
}
