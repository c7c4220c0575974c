//! Dense autoencoders trained from scratch: activations, losses, the six
//! variant objectives, RMSProp and the mini-batch loop.

mod activation;
mod export;
mod loss;
mod model;
mod optim;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use activation::{SELU_ALPHA, SELU_LAMBDA};
pub use export::{ExportedLayer, ModelExport, MODEL_SCHEMA};
pub use loss::{loss, loss_gradient, LOSS_EPSILON};
pub use model::{backward, forward, init_params, objective, reconstruct, reconstruction_mse, Dense, ForwardCache, ModelParams};
pub use optim::{rmsprop_step, OptimizerState, RmsProp};
pub use train::{train, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite values produced at layer {layer}")]
    NonFinite { layer: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// Hyperparameters of the variant-specific objective terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantParams {
    /// Std-dev of the Gaussian input corruption (denoising).
    pub noise_sigma: f64,
    /// Target mean coding activation (sparse).
    pub sparsity_target: f64,
    pub sparsity_weight: f64,
    /// Weight of the squared Frobenius norm of the encoder Jacobian (contractive).
    pub contraction_weight: f64,
    /// Gaussian kernel bandwidth (robust).
    pub correntropy_sigma: f64,
    /// Weight of the latent KL divergence (variational).
    pub kl_weight: f64,
}

impl Default for VariantParams {
    fn default() -> Self {
        Self {
            noise_sigma: 0.1,
            sparsity_target: 0.1,
            sparsity_weight: 0.01,
            contraction_weight: 1e-4,
            correntropy_sigma: 0.2,
            kl_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Clamped to the training-set size.
    pub batch_size: usize,
    pub variant: VariantParams,
    pub optimizer: RmsProp,
    /// Record the full-training-set MSE after every epoch.
    #[serde(default)]
    pub track_epoch_mse: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            variant: VariantParams::default(),
            optimizer: RmsProp::default(),
            track_epoch_mse: false,
        }
    }
}
