use rand::Rng;

use super::{SearchConfig, SearchError, StopReason, Tracker};
use crate::genome::{from_unit_vector, to_unit_vector, Chromosome, GENE_COUNT};

type Vector = [f64; GENE_COUNT];

/// DE/local-to-best/1 trial vector before crossover.
pub(crate) fn donor(x: &Vector, best: &Vector, r1: &Vector, r2: &Vector, f: f64) -> Vector {
    let mut v = [0.0; GENE_COUNT];
    for j in 0..GENE_COUNT {
        v[j] = x[j] + f * (best[j] - x[j]) + f * (r1[j] - r2[j]);
    }
    v
}

/// Binomial crossover; coordinate `forced` always comes from the donor.
pub(crate) fn binomial<R: Rng + ?Sized>(x: &Vector, v: &Vector, cr: f64, forced: usize, rng: &mut R) -> Vector {
    let mut u = *x;
    for j in 0..GENE_COUNT {
        if j == forced || rng.random::<f64>() < cr {
            u[j] = v[j];
        }
    }
    u
}

fn two_others<R: Rng + ?Sized>(n: usize, i: usize, rng: &mut R) -> (usize, usize) {
    let pick = |rng: &mut R, skip: &[usize]| loop {
        let k = rng.random_range(0..n);
        if !skip.contains(&k) {
            return k;
        }
    };
    let r1 = pick(rng, &[i]);
    let r2 = pick(rng, &[i, r1]);
    (r1, r2)
}

pub(super) fn run<R: Rng + ?Sized>(
    t: &mut Tracker<'_>,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<StopReason, SearchError> {
    let bounds = *t.ev.bounds();
    let n = cfg.population_size;
    let initial: Vec<Chromosome> = (0..n).map(|_| Chromosome::random(&bounds, rng)).collect();
    let Some(records) = t.evaluate(&initial)? else {
        return Ok(StopReason::Budget);
    };
    let mut agents: Vec<Vector> = initial.iter().map(|c| to_unit_vector(c, &bounds)).collect();
    let mut fitness: Vec<f64> = records.iter().map(|r| r.fitness).collect();
    t.history.push(fitness.clone());

    for _ in 0..cfg.iterations {
        if t.should_stop() {
            return Ok(StopReason::Budget);
        }
        let best = (0..n).min_by(|&a, &b| fitness[a].total_cmp(&fitness[b])).unwrap_or(0);
        let trials: Vec<Vector> = (0..n)
            .map(|i| {
                let (r1, r2) = two_others(n, i, rng);
                let v = donor(&agents[i], &agents[best], &agents[r1], &agents[r2], cfg.de_f);
                let forced = rng.random_range(0..GENE_COUNT);
                binomial(&agents[i], &v, cfg.de_cr, forced, rng).map(|x| x.clamp(0.0, 1.0))
            })
            .collect();
        let decoded: Vec<Chromosome> = trials.iter().map(|u| from_unit_vector(u, &bounds)).collect();
        let Some(scored) = t.evaluate(&decoded)? else {
            return Ok(StopReason::Budget);
        };
        for (i, r) in scored.iter().enumerate() {
            if r.fitness <= fitness[i] {
                agents[i] = trials[i];
                fitness[i] = r.fitness;
            }
        }
        t.generations += 1;
        t.history.push(fitness.clone());
    }
    Ok(StopReason::Iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_agents_pull_toward_best() {
        let x = [0.2; GENE_COUNT];
        let best = [0.6; GENE_COUNT];
        let v = donor(&x, &best, &x, &x, 0.5);
        for &vj in &v {
            assert!((vj - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weight_single_copy_keeps_agent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vector = std::array::from_fn(|j| j as f64 / 20.0);
        let other: Vector = std::array::from_fn(|j| 1.0 - j as f64 / 20.0);
        let v = donor(&x, &other, &other, &x, 0.0);
        let u = binomial(&x, &v, 0.0, 3, &mut rng);
        assert_eq!(u, x);
    }

    #[test]
    fn crossover_takes_forced_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = [0.0; GENE_COUNT];
        let v = [1.0; GENE_COUNT];
        let u = binomial(&x, &v, 0.0, 7, &mut rng);
        assert_eq!(u.iter().filter(|&&c| c == 1.0).count(), 1);
        assert_eq!(u[7], 1.0);
        let u = binomial(&x, &v, 1.0, 0, &mut rng);
        assert_eq!(u, v);
    }

    #[test]
    fn partners_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, b) = two_others(3, 1, &mut rng);
            assert!(a != 1 && b != 1 && a != b);
        }
    }
}
