mod common;

use ae_search::genome::{Activation, AeVariant, ArchitectureSpec, LossKind};
use ae_search::neural::{train, ModelExport, NeuralError, TrainConfig, MODEL_SCHEMA};
use common::{linear_data, linear_spec};

#[test]
fn linear_autoencoder_learns_identity() {
    let data = linear_data(200, 4, 1);
    let cfg = TrainConfig {
        epochs: 200,
        ..TrainConfig::default()
    };
    let report = train(&linear_spec(4, 4), &data, &cfg, 7).unwrap();
    assert!(report.train_mse < 1e-3, "train mse {}", report.train_mse);
}

#[test]
fn training_is_deterministic() {
    let data = linear_data(60, 5, 2);
    let mut spec = linear_spec(5, 2);
    spec.variant = AeVariant::Variational;
    spec.coding_activation = Activation::Tanh;
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let a = train(&spec, &data, &cfg, 11).unwrap();
    let b = train(&spec, &data, &cfg, 11).unwrap();
    assert_eq!(a.train_mse.to_bits(), b.train_mse.to_bits());
    assert_eq!(a.params, b.params);
    let c = train(&spec, &data, &cfg, 12).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn batching_arithmetic() {
    let data = linear_data(50, 3, 3);
    let spec = linear_spec(3, 1);
    let one_batch = TrainConfig {
        epochs: 1,
        batch_size: 50,
        ..TrainConfig::default()
    };
    assert_eq!(train(&spec, &data, &one_batch, 0).unwrap().steps, 1);
    let default = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    // 50 rows in batches of 32: one full and one partial batch per epoch.
    assert_eq!(train(&spec, &data, &default, 0).unwrap().steps, 4);
    let zero = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    assert!(matches!(train(&spec, &data, &zero, 0), Err(NeuralError::InvalidConfig(_))));
}

#[test]
fn epoch_mse_mostly_decreases_on_linear_data() {
    let data = linear_data(200, 4, 5);
    let cfg = TrainConfig {
        epochs: 100,
        track_epoch_mse: true,
        ..TrainConfig::default()
    };
    let report = train(&linear_spec(4, 2), &data, &cfg, 3).unwrap();
    let drops = report.epoch_mse.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(drops as f64 >= 0.9 * 99.0, "{drops} of 99 epochs decreased");
}

#[test]
fn every_variant_trains_and_keeps_shapes() {
    let data = linear_data(40, 6, 4);
    for variant in AeVariant::ALL {
        let spec = ArchitectureSpec {
            variant,
            encoder_units: vec![5, 4],
            coding_units: 2,
            encoder_activations: vec![Activation::Elu, Activation::Sigmoid],
            coding_activation: Activation::Tanh,
            decoder_activations: vec![Activation::Selu, Activation::Softsign],
            output_activation: Activation::Softplus,
            loss: LossKind::Mse,
            features: 6,
        };
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let report = train(&spec, &data, &cfg, 1).unwrap();
        let sizes = spec.layer_sizes();
        for (k, layer) in report.params.layers.iter().enumerate() {
            assert_eq!(layer.weights.dim(), (sizes[k + 1], sizes[k]));
        }
        assert_eq!(report.params.log_var.is_some(), variant == AeVariant::Variational);
        assert!(report.train_mse.is_finite());
    }
}

#[test]
fn model_export_schema() {
    let data = linear_data(20, 3, 6);
    let spec = linear_spec(3, 2);
    let report = train(&spec, &data, &TrainConfig::default(), 1).unwrap();
    let export = ModelExport::new(&spec, &report.params, report.train_mse);
    let json: serde_json::Value = serde_json::to_value(&export).unwrap();
    assert_eq!(json["schema"], MODEL_SCHEMA);
    assert_eq!(json["layers"][0]["rows"], 2);
    assert_eq!(json["layers"][0]["cols"], 3);
    assert_eq!(json["layers"][0]["weights"].as_array().unwrap().len(), 6);
    assert_eq!(json["layers"][0]["weights"][1], report.params.layers[0].weights[[0, 1]]);
    assert_eq!(json["architecture"]["output_activation"], "linear");
    let back: ModelExport = serde_json::from_value(json).unwrap();
    assert_eq!(back, export);
}
