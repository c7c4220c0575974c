use serde::{Deserialize, Serialize};

use crate::genome::ArchitectureSpec;

use super::{Dense, ModelParams};

pub const MODEL_SCHEMA: &str = "evoaaa-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedLayer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl From<&Dense> for ExportedLayer {
    fn from(d: &Dense) -> Self {
        Self {
            rows: d.weights.nrows(),
            cols: d.weights.ncols(),
            weights: d.weights.iter().copied().collect(),
            bias: d.bias.to_vec(),
        }
    }
}

/// JSON document describing a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub schema: String,
    pub architecture: ArchitectureSpec,
    pub layers: Vec<ExportedLayer>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_var_head: Option<ExportedLayer>,
    pub train_mse: f64,
}

impl ModelExport {
    pub fn new(spec: &ArchitectureSpec, params: &ModelParams, train_mse: f64) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_string(),
            architecture: spec.clone(),
            layers: params.layers.iter().map(ExportedLayer::from).collect(),
            log_var_head: params.log_var.as_ref().map(ExportedLayer::from),
            train_mse,
        }
    }
}
