use rand::Rng;

use super::{ranked, SearchConfig, SearchError, StopReason, Tracker};
use crate::genome::{mutate, Chromosome};

/// (mu + lambda): parents mutate only, survivors are the best of the union.
pub(super) fn run<R: Rng + ?Sized>(
    t: &mut Tracker<'_>,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<StopReason, SearchError> {
    let bounds = *t.ev.bounds();
    let initial: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| Chromosome::random(&bounds, rng))
        .collect();
    let Some(mut parents) = t.evaluate(&initial)? else {
        return Ok(StopReason::Budget);
    };
    t.history.push(parents.iter().map(|r| r.fitness).collect());

    for _ in 0..cfg.iterations {
        if t.should_stop() {
            return Ok(StopReason::Budget);
        }
        let mutants: Vec<Chromosome> = parents
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.chromosome, cfg.es_offspring_per_parent))
            .map(|c| mutate(&c, cfg.mutation_prob, &bounds, rng))
            .collect();
        let Some(offspring) = t.evaluate(&mutants)? else {
            return Ok(StopReason::Budget);
        };
        // Parents come first, so ties keep the incumbents.
        let union: Vec<_> = parents.into_iter().chain(offspring).collect();
        let fitness: Vec<f64> = union.iter().map(|r| r.fitness).collect();
        parents = ranked(&fitness)[..cfg.population_size]
            .iter()
            .map(|&i| union[i].clone())
            .collect();
        t.generations += 1;
        t.history.push(parents.iter().map(|r| r.fitness).collect());
    }
    Ok(StopReason::Iterations)
}
