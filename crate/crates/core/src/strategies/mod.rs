//! Search procedures over the chromosome space.
//!
//! Every strategy drives a shared [`Evaluator`]: it proposes a batch, the
//! evaluator trains the batch on its worker pool, and selection continues
//! once the whole batch is back.

mod de;
mod es;
mod exhaustive;
mod ga;
mod random;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::fitness::{Budget, EvalSettings, Evaluator, FitnessError, FitnessRecord, SolutionsLog};
use crate::genome::GENE_COUNT;
use crate::neural::TrainConfig;
use crate::seed::mix_seed;

pub use exhaustive::Odometer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ga,
    Es,
    De,
    Exhaustive,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Ga,
        Strategy::Es,
        Strategy::De,
        Strategy::Exhaustive,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ga => "ga",
            Strategy::Es => "es",
            Strategy::De => "de",
            Strategy::Exhaustive => "exhaustive",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy '{s}' (expected ga, es, de, exhaustive or random)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub population_size: usize,
    pub iterations: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    pub elitism_count: usize,
    pub de_cr: f64,
    pub de_f: f64,
    /// Mutants produced by each ES parent per generation.
    pub es_offspring_per_parent: usize,
    /// Proposals handed to the evaluator at once by exhaustive and random search.
    pub batch: usize,
    pub alpha: f64,
    pub budget: Budget,
    pub master_seed: u64,
    pub train: TrainConfig,
    pub memoize: bool,
    pub workers: usize,
}

impl SearchConfig {
    pub fn defaults_for(strategy: Strategy) -> Self {
        let (population_size, iterations) = match strategy {
            Strategy::Ga => (50, 100),
            Strategy::Es => (4, 500),
            Strategy::De => (150, 30),
            Strategy::Exhaustive | Strategy::Random => (0, 0),
        };
        Self {
            strategy,
            population_size,
            iterations,
            mutation_prob: 1.0 / GENE_COUNT as f64,
            crossover_prob: 1.0,
            elitism_count: 5,
            de_cr: 0.5,
            de_f: 0.8,
            es_offspring_per_parent: 2,
            batch: 16,
            alpha: 0.0001,
            budget: Budget::default(),
            master_seed: 0,
            train: TrainConfig::default(),
            memoize: true,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.mutation_prob) || !prob(self.crossover_prob) || !prob(self.de_cr) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a finite non-negative number");
        }
        if !self.de_f.is_finite() {
            return bad("de_f must be finite");
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        match self.strategy {
            Strategy::Ga if self.population_size < self.elitism_count + 2 => {
                bad("ga needs population_size >= elitism_count + 2")
            }
            Strategy::Es if self.population_size == 0 || self.es_offspring_per_parent == 0 => {
                bad("es needs at least one parent and one offspring per parent")
            }
            Strategy::De if self.population_size < 3 => bad("de needs population_size >= 3"),
            Strategy::Exhaustive | Strategy::Random if self.batch == 0 => bad("batch must be positive"),
            _ => Ok(()),
        }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            alpha: self.alpha,
            train: self.train,
            master_seed: self.master_seed,
            memoize: self.memoize,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("no individual was evaluated before the budget ran out")]
    NothingEvaluated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TerminationCost,
    Budget,
    Iterations,
    SpaceExhausted,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: FitnessRecord,
    /// Every record in `eval_index` order, invalid ones included.
    pub trajectory: Vec<FitnessRecord>,
    /// Valid individuals charged to the budget.
    pub evaluations: u64,
    pub generations: usize,
    /// Population fitness after initialisation and after each generation
    /// (GA, ES and DE only).
    pub population_history: Vec<Vec<f64>>,
    pub elapsed: Duration,
    pub stop_reason: StopReason,
}

impl SearchOutcome {
    /// Best fitness after each record, in `eval_index` order.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trajectory
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.fitness);
                Some(*best)
            })
            .collect()
    }
}

/// Bookkeeping shared by all strategies.
pub(crate) struct Tracker<'a> {
    pub ev: &'a Evaluator,
    pub best: Option<FitnessRecord>,
    pub generations: usize,
    pub history: Vec<Vec<f64>>,
    stop: Option<StopReason>,
}

impl<'a> Tracker<'a> {
    fn new(ev: &'a Evaluator) -> Self {
        Self {
            ev,
            best: None,
            generations: 0,
            history: Vec::new(),
            stop: None,
        }
    }

    /// Evaluates `batch`; returns `None` when it was cut short by the budget.
    pub fn evaluate(&mut self, batch: &[crate::genome::Chromosome]) -> Result<Option<Vec<FitnessRecord>>, SearchError> {
        let out = self.ev.evaluate_batch(batch)?;
        for r in &out.records {
            if self.best.as_ref().is_none_or(|b| r.fitness < b.fitness) {
                self.best = Some(r.clone());
            }
        }
        if out.exhausted {
            self.stop = Some(StopReason::Budget);
            return Ok(None);
        }
        Ok(Some(out.records))
    }

    /// Checks the termination rules after a completed batch.
    pub fn should_stop(&mut self) -> bool {
        if self.stop.is_some() {
            return true;
        }
        let best = self.best.as_ref().map_or(f64::INFINITY, |b| b.fitness);
        if best <= self.ev.budget().termination_cost {
            self.stop = Some(StopReason::TerminationCost);
        } else if self.ev.budget_exhausted() {
            self.stop = Some(StopReason::Budget);
        }
        self.stop.is_some()
    }

    pub fn finish(self, fallback: StopReason) -> Result<SearchOutcome, SearchError> {
        let best = self.best.ok_or(SearchError::NothingEvaluated)?;
        Ok(SearchOutcome {
            best,
            trajectory: self.ev.records(),
            evaluations: self.ev.evaluations(),
            generations: self.generations,
            population_history: self.history,
            elapsed: self.ev.elapsed(),
            stop_reason: self.stop.unwrap_or(fallback),
        })
    }
}

/// Runs the configured strategy with an optional solutions log.
pub fn run_logged(dataset: &Dataset, cfg: &SearchConfig, log: Option<SolutionsLog>) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let mut ev = Evaluator::new(dataset, cfg.eval_settings(), cfg.budget, cfg.strategy.name())?;
    if let Some(log) = log {
        ev = ev.with_log(log);
    }
    search_with(&ev, cfg)
}

pub fn run(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run_logged(dataset, cfg, None)
}

/// Runs the configured strategy against an existing evaluator.
pub fn search_with(ev: &Evaluator, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, 2));
    let mut t = Tracker::new(ev);
    let fallback = match cfg.strategy {
        Strategy::Ga => ga::run(&mut t, cfg, &mut rng)?,
        Strategy::Es => es::run(&mut t, cfg, &mut rng)?,
        Strategy::De => de::run(&mut t, cfg, &mut rng)?,
        Strategy::Exhaustive => exhaustive::run(&mut t, cfg)?,
        Strategy::Random => random::run(&mut t, cfg, &mut rng)?,
    };
    t.finish(fallback)
}

pub fn run_ga(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run(dataset, &SearchConfig { strategy: Strategy::Ga, ..cfg.clone() })
}

pub fn run_es(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run(dataset, &SearchConfig { strategy: Strategy::Es, ..cfg.clone() })
}

pub fn run_de(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run(dataset, &SearchConfig { strategy: Strategy::De, ..cfg.clone() })
}

pub fn run_exhaustive(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run(dataset, &SearchConfig { strategy: Strategy::Exhaustive, ..cfg.clone() })
}

pub fn run_random(dataset: &Dataset, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run(dataset, &SearchConfig { strategy: Strategy::Random, ..cfg.clone() })
}

/// Indices of `fitness` sorted ascending; ties keep their original order.
pub(crate) fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    order
}
