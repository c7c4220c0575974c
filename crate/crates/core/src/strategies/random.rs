use rand::Rng;

use super::{SearchConfig, SearchError, StopReason, Tracker};
use crate::genome::Chromosome;

pub(crate) fn sample_valid<R: Rng + ?Sized>(bounds: &crate::genome::GeneBounds, rng: &mut R) -> Chromosome {
    loop {
        let c = Chromosome::random(bounds, rng);
        if c.is_valid() {
            return c;
        }
    }
}

/// Uniform sampling of structurally valid chromosomes until the budget ends.
pub(super) fn run<R: Rng + ?Sized>(
    t: &mut Tracker<'_>,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<StopReason, SearchError> {
    let bounds = *t.ev.bounds();
    loop {
        let batch: Vec<Chromosome> = (0..cfg.batch).map(|_| sample_valid(&bounds, rng)).collect();
        if t.evaluate(&batch)?.is_none() || t.should_stop() {
            return Ok(StopReason::Budget);
        }
        t.generations += 1;
    }
}
