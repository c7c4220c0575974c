use rand::Rng;

use super::{ranked, SearchConfig, SearchError, StopReason, Tracker};
use crate::fitness::FitnessRecord;
use crate::genome::{crossover, mutate, Chromosome};

const ROULETTE_EPS: f64 = 1e-9;

/// Fitness-proportional pick for minimisation: weight `1/(f + eps)`,
/// infinite fitness weighs nothing. Falls back to uniform when every weight is 0.
pub(crate) fn roulette<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> usize {
    let weights: Vec<f64> = fitness
        .iter()
        .map(|&f| if f.is_finite() { 1.0 / (f + ROULETTE_EPS) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return rng.random_range(0..fitness.len());
    }
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub(super) fn run<R: Rng + ?Sized>(
    t: &mut Tracker<'_>,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<StopReason, SearchError> {
    let bounds = *t.ev.bounds();
    let initial: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| Chromosome::random(&bounds, rng))
        .collect();
    let Some(mut population) = t.evaluate(&initial)? else {
        return Ok(StopReason::Budget);
    };
    t.history.push(population.iter().map(|r| r.fitness).collect());

    for _ in 0..cfg.iterations {
        if t.should_stop() {
            return Ok(StopReason::Budget);
        }
        let fitness: Vec<f64> = population.iter().map(|r| r.fitness).collect();
        let order = ranked(&fitness);
        let elites: Vec<FitnessRecord> = order[..cfg.elitism_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let pool: Vec<&FitnessRecord> = order[cfg.elitism_count..].iter().map(|&i| &population[i]).collect();
        let pool_fitness: Vec<f64> = pool.iter().map(|r| r.fitness).collect();

        let wanted = cfg.population_size - cfg.elitism_count;
        let mut children = Vec::with_capacity(wanted + 1);
        while children.len() < wanted {
            let a = pool[roulette(&pool_fitness, rng)].chromosome;
            let b = pool[roulette(&pool_fitness, rng)].chromosome;
            let (x, y) = if rng.random::<f64>() < cfg.crossover_prob {
                crossover(&a, &b, rng)
            } else {
                (a, b)
            };
            children.push(mutate(&x, cfg.mutation_prob, &bounds, rng));
            if children.len() < wanted {
                children.push(mutate(&y, cfg.mutation_prob, &bounds, rng));
            }
        }
        let Some(offspring) = t.evaluate(&children)? else {
            return Ok(StopReason::Budget);
        };
        population = elites;
        population.extend(offspring);
        t.generations += 1;
        t.history.push(population.iter().map(|r| r.fitness).collect());
    }
    Ok(StopReason::Iterations)
}
