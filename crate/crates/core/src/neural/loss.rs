//! Per-sample reconstruction losses and their gradients with respect to the
//! network output.

use crate::genome::LossKind;

use super::NeuralError;

/// Clamp/guard constant shared by BCE, MAPE and cosine proximity.
pub const LOSS_EPSILON: f64 = 1e-7;

fn check_lengths(target: &[f64], output: &[f64]) -> Result<(), NeuralError> {
    if target.len() != output.len() || target.is_empty() {
        return Err(NeuralError::Shape {
            expected: target.len(),
            got: output.len(),
        });
    }
    Ok(())
}

pub fn loss(kind: LossKind, target: &[f64], output: &[f64]) -> Result<f64, NeuralError> {
    check_lengths(target, output)?;
    Ok(loss_unchecked(kind, target, output))
}

pub fn loss_gradient(kind: LossKind, target: &[f64], output: &[f64]) -> Result<Vec<f64>, NeuralError> {
    check_lengths(target, output)?;
    let mut grad = vec![0.0; output.len()];
    loss_gradient_into(kind, target, output, &mut grad);
    Ok(grad)
}

pub(crate) fn loss_unchecked(kind: LossKind, target: &[f64], output: &[f64]) -> f64 {
    let m = target.len() as f64;
    let pairs = target.iter().zip(output);
    match kind {
        LossKind::Mse => pairs.map(|(y, o)| (o - y) * (o - y)).sum::<f64>() / m,
        LossKind::Mae => pairs.map(|(y, o)| (o - y).abs()).sum::<f64>() / m,
        LossKind::Mape => {
            100.0 * pairs.map(|(y, o)| (o - y).abs() / y.abs().max(LOSS_EPSILON)).sum::<f64>() / m
        }
        LossKind::Bce => {
            -pairs
                .map(|(y, o)| {
                    let p = o.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
                    y * p.ln() + (1.0 - y) * (1.0 - p).ln()
                })
                .sum::<f64>()
                / m
        }
        LossKind::CosineProximity => {
            let dot: f64 = pairs.map(|(y, o)| y * o).sum();
            -dot / (norm(target).max(LOSS_EPSILON) * norm(output).max(LOSS_EPSILON))
        }
    }
}

pub(crate) fn loss_gradient_into(kind: LossKind, target: &[f64], output: &[f64], grad: &mut [f64]) {
    let m = target.len() as f64;
    match kind {
        LossKind::Mse => {
            for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
                *g = 2.0 * (o - y) / m;
            }
        }
        LossKind::Mae => {
            for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
                *g = sign(o - y) / m;
            }
        }
        LossKind::Mape => {
            for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
                *g = 100.0 * sign(o - y) / (y.abs().max(LOSS_EPSILON) * m);
            }
        }
        LossKind::Bce => {
            for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
                *g = if *o < LOSS_EPSILON || *o > 1.0 - LOSS_EPSILON {
                    0.0
                } else {
                    (-y / o + (1.0 - y) / (1.0 - o)) / m
                };
            }
        }
        LossKind::CosineProximity => {
            let ny = norm(target).max(LOSS_EPSILON);
            let raw = norm(output);
            let no = raw.max(LOSS_EPSILON);
            let dot: f64 = target.iter().zip(output).map(|(y, o)| y * o).sum();
            let guarded = raw <= LOSS_EPSILON;
            for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
                *g = -y / (ny * no);
                if !guarded {
                    *g += dot * o / (ny * no * no * no);
                }
            }
        }
    }
}

/// Negative Gaussian correntropy averaged over features.
pub(crate) fn correntropy_loss(target: &[f64], output: &[f64], sigma: f64) -> f64 {
    let m = target.len() as f64;
    -target
        .iter()
        .zip(output)
        .map(|(y, o)| (-(y - o) * (y - o) / (2.0 * sigma * sigma)).exp())
        .sum::<f64>()
        / m
}

pub(crate) fn correntropy_gradient_into(target: &[f64], output: &[f64], sigma: f64, grad: &mut [f64]) {
    let m = target.len() as f64;
    let s2 = sigma * sigma;
    for ((g, y), o) in grad.iter_mut().zip(target).zip(output) {
        let e = o - y;
        *g = (-e * e / (2.0 * s2)).exp() * e / (s2 * m);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_points() {
        let y = [0.3, -1.2, 4.0, 0.0];
        assert_eq!(loss(LossKind::Mse, &y, &y).unwrap(), 0.0);
        assert_eq!(loss(LossKind::Mae, &y, &y).unwrap(), 0.0);
        assert!((loss(LossKind::CosineProximity, &y, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(loss_gradient(LossKind::Mse, &y, &y).unwrap().iter().all(|g| *g == 0.0));
        assert!(matches!(
            loss(LossKind::Mse, &y, &y[..2]),
            Err(NeuralError::Shape { .. })
        ));
    }

    #[test]
    fn bce_clamps_extremes() {
        let l = loss(LossKind::Bce, &[1.0], &[0.0]).unwrap();
        assert!((l + LOSS_EPSILON.ln()).abs() < 1e-9);
        assert_eq!(loss_gradient(LossKind::Bce, &[1.0], &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for kind in LossKind::ALL {
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let n = rng.random_range(1..8);
                let target: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let output: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
                let grad = loss_gradient(kind, &target, &output).unwrap();
                for i in 0..n {
                    let mut up = output.clone();
                    let mut dn = output.clone();
                    up[i] += h;
                    dn[i] -= h;
                    let fd = (loss(kind, &target, &up).unwrap() - loss(kind, &target, &dn).unwrap())
                        / (2.0 * h);
                    let err = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-4);
                    worst = worst.max(err);
                }
            }
            assert!(worst < 1e-4, "{kind:?}: {worst}");
        }
    }

    #[test]
    fn correntropy_gradient_matches_differences() {
        let (y, o) = ([0.2, 0.7, 0.1], [0.3, 0.4, 0.15]);
        let mut g = [0.0; 3];
        correntropy_gradient_into(&y, &o, 0.2, &mut g);
        for i in 0..3 {
            let (mut up, mut dn) = (o, o);
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let fd = (correntropy_loss(&y, &up, 0.2) - correntropy_loss(&y, &dn, 0.2)) / 2e-6;
            assert!((g[i] - fd).abs() < 1e-7);
        }
        assert_eq!(correntropy_loss(&y, &y, 0.2), -1.0);
    }
}
