use super::{SearchConfig, SearchError, StopReason, Tracker};
use crate::genome::{Chromosome, GeneBounds, FIRST_ENCODER_ACT_GENE, GENE_COUNT};

/// Enumerates structurally valid chromosomes in odometer order: the last gene
/// varies fastest, the first slowest, starting from the lower bound.
///
/// Validity only depends on genes 2 to 6, so an invalid unit prefix skips its
/// whole activation/loss tail at once.
#[derive(Debug, Clone)]
pub struct Odometer {
    bounds: GeneBounds,
    state: [u32; GENE_COUNT],
    started: bool,
    done: bool,
}

impl Odometer {
    pub fn new(bounds: &GeneBounds) -> Self {
        Self {
            bounds: *bounds,
            state: *bounds.lower().genes(),
            started: false,
            done: false,
        }
    }

    /// Increments the number formed by digits `0..end`; digits after the one
    /// that absorbed the carry reset to their lower bound.
    fn increment(&mut self, end: usize) -> bool {
        for i in (0..end).rev() {
            if self.state[i] < self.bounds.hi(i) {
                self.state[i] += 1;
                for j in i + 1..GENE_COUNT {
                    self.state[j] = self.bounds.lo(j);
                }
                return true;
            }
        }
        false
    }

    fn current(&self) -> Chromosome {
        Chromosome::new(self.state, &self.bounds).expect("odometer stays within bounds")
    }
}

impl Iterator for Odometer {
    type Item = Chromosome;

    fn next(&mut self) -> Option<Chromosome> {
        if self.done {
            return None;
        }
        if self.started && !self.increment(GENE_COUNT) {
            self.done = true;
            return None;
        }
        self.started = true;
        while !self.current().is_valid() {
            if !self.increment(FIRST_ENCODER_ACT_GENE) {
                self.done = true;
                return None;
            }
        }
        Some(self.current())
    }
}

pub(super) fn run(t: &mut Tracker<'_>, cfg: &SearchConfig) -> Result<StopReason, SearchError> {
    let mut states = Odometer::new(t.ev.bounds());
    loop {
        let batch: Vec<Chromosome> = states.by_ref().take(cfg.batch).collect();
        if batch.is_empty() {
            return Ok(StopReason::SpaceExhausted);
        }
        if t.evaluate(&batch)?.is_none() || t.should_stop() {
            return Ok(StopReason::Budget);
        }
        t.generations += 1;
    }
}
