use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::genome::{AeVariant, ArchitectureSpec};
use crate::seed::mix_seed;

use super::{backward, forward, init_params, reconstruction_mse, rmsprop_step, ModelParams, NeuralError, OptimizerState, TrainConfig};

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: ModelParams,
    /// Plain MSE over the full training matrix after the last epoch.
    pub train_mse: f64,
    /// Per-epoch training MSE, only when `track_epoch_mse` is set.
    pub epoch_mse: Vec<f64>,
    pub steps: usize,
}

/// Mini-batch training with seeded shuffling; `seed` also drives the weight
/// initialisation and any variant noise.
pub fn train(spec: &ArchitectureSpec, data: &Array2<f64>, cfg: &TrainConfig, seed: u64) -> Result<TrainReport, NeuralError> {
    if cfg.epochs == 0 {
        return Err(NeuralError::InvalidConfig("epochs must be at least 1".into()));
    }
    if cfg.batch_size == 0 {
        return Err(NeuralError::InvalidConfig("batch size must be at least 1".into()));
    }
    let n = data.nrows();
    if n == 0 {
        return Err(NeuralError::InvalidConfig("empty training matrix".into()));
    }
    if data.ncols() != spec.features {
        return Err(NeuralError::Shape {
            expected: spec.features,
            got: data.ncols(),
        });
    }

    let mut params = init_params(spec, seed);
    let mut state = OptimizerState::new(&params, cfg.optimizer);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let corruption = Normal::new(0.0, cfg.variant.noise_sigma)
        .map_err(|e| NeuralError::InvalidConfig(e.to_string()))?;
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_mse = Vec::new();
    let mut steps = 0;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let target = data.select(Axis(0), chunk);
            let input = if spec.variant == AeVariant::Denoising {
                target.mapv(|v| v + corruption.sample(&mut rng))
            } else {
                target.clone()
            };
            let noise = (spec.variant == AeVariant::Variational).then(|| {
                Array2::from_shape_simple_fn((chunk.len(), spec.coding_units), || StandardNormal.sample(&mut rng))
            });
            let (_, cache) = forward(&params, spec, &input, noise.as_ref())?;
            let grads = backward(&params, spec, &target, &cache, &cfg.variant)?;
            rmsprop_step(&mut params, &grads, &mut state);
            if !params.is_finite() {
                return Err(NeuralError::NonFinite { layer: 0 });
            }
            steps += 1;
        }
        if cfg.track_epoch_mse {
            epoch_mse.push(reconstruction_mse(&params, spec, data)?);
        }
    }
    let train_mse = reconstruction_mse(&params, spec, data)?;
    Ok(TrainReport {
        params,
        train_mse,
        epoch_mse,
        steps,
    })
}
