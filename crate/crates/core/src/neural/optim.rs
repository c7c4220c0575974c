use serde::{Deserialize, Serialize};

use super::ModelParams;

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-7,
        }
    }
}

/// Running mean of squared gradients, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: RmsProp,
    pub mean_square: ModelParams,
}

impl OptimizerState {
    pub fn new(params: &ModelParams, config: RmsProp) -> Self {
        Self {
            config,
            mean_square: params.zeros_like(),
        }
    }
}

/// `acc = rho acc + (1 - rho) g^2; theta -= lr g / (sqrt(acc) + eps)`.
pub fn rmsprop_step(params: &mut ModelParams, grads: &ModelParams, state: &mut OptimizerState) {
    let RmsProp {
        learning_rate,
        rho,
        epsilon,
    } = state.config;
    params.zip_apply(grads, &mut state.mean_square, |p, g, acc| {
        *acc = rho * *acc + (1.0 - rho) * g * g;
        *p -= learning_rate * g / (acc.sqrt() + epsilon);
    });
}
