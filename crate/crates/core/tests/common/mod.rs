#![allow(dead_code)]

use ae_search::genome::{Activation, AeVariant, ArchitectureSpec, LossKind};
use ae_search::neural::{backward, forward, init_params, objective, ModelParams, VariantParams};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-4;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

pub struct Instance {
    pub spec: ArchitectureSpec,
    pub params: ModelParams,
    pub input: Array2<f64>,
    pub target: Array2<f64>,
    pub noise: Option<Array2<f64>>,
}

/// Random small problem with random (non-zero) biases so no pre-activation
/// sits exactly on a kink.
pub fn instance(
    variant: AeVariant,
    pairs: usize,
    hidden: Activation,
    output: Activation,
    loss: LossKind,
    rng: &mut ChaCha8Rng,
) -> Instance {
    let features = rng.random_range(2..=6usize);
    let batch = rng.random_range(1..=8usize);
    let mut widths = vec![features];
    for _ in 0..=pairs {
        let prev = *widths.last().unwrap();
        widths.push(rng.random_range(1..=prev));
    }
    let spec = ArchitectureSpec {
        variant,
        encoder_units: widths[1..=pairs].to_vec(),
        coding_units: widths[pairs + 1],
        encoder_activations: vec![hidden; pairs],
        coding_activation: hidden,
        decoder_activations: vec![hidden; pairs],
        output_activation: output,
        loss,
        features,
    };
    spec.validate().unwrap();
    let mut params = init_params(&spec, rng.random());
    let flat: Vec<f64> = params
        .to_flat()
        .iter()
        .map(|w| w + rng.random_range(-0.3..0.3))
        .collect();
    params.set_flat(&flat);
    let target = Array2::from_shape_simple_fn((batch, features), || rng.random_range(0.05..1.0));
    let input = if variant == AeVariant::Denoising {
        target.mapv(|v| v + rng.random_range(-0.1..0.1))
    } else {
        target.clone()
    };
    let noise = (variant == AeVariant::Variational)
        .then(|| Array2::from_shape_simple_fn((batch, spec.coding_units), || rng.random_range(-1.5..1.5)));
    Instance {
        spec,
        params,
        input,
        target,
        noise,
    }
}

/// Largest relative error between the analytic gradient and central
/// differences (step `FD_STEP`) over every parameter.
pub fn max_gradient_error(inst: &Instance, hp: &VariantParams) -> f64 {
    let (_, cache) = forward(&inst.params, &inst.spec, &inst.input, inst.noise.as_ref()).unwrap();
    let analytic = backward(&inst.params, &inst.spec, &inst.target, &cache, hp)
        .unwrap()
        .to_flat();
    let base = inst.params.to_flat();
    let mut probe = inst.params.clone();
    let mut eval = |values: &[f64]| {
        probe.set_flat(values);
        objective(&probe, &inst.spec, &inst.input, &inst.target, inst.noise.as_ref(), hp).unwrap()
    };
    let mut worst: f64 = 0.0;
    let mut shifted = base.clone();
    for i in 0..base.len() {
        let mut at = |offset: f64| {
            shifted[i] = base[i] + offset;
            let v = eval(&shifted);
            shifted[i] = base[i];
            v
        };
        let (p1, m1) = (at(FD_STEP), at(-FD_STEP));
        let (p2, m2) = (at(2.0 * FD_STEP), at(-2.0 * FD_STEP));
        // Fourth-order central stencil: outputs near the BCE clamp have huge
        // third derivatives that swamp the two-point estimate.
        let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// Every (variant, depth, hidden activation, output activation, loss)
/// combination; returns the worst error and its description.
pub fn gradient_sweep(seed: u64) -> (f64, String, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Larger penalty weights than the defaults so the variant terms are not
    // swamped by reconstruction in the comparison.
    let hp = VariantParams {
        contraction_weight: 0.1,
        sparsity_weight: 0.5,
        ..VariantParams::default()
    };
    let mut worst = (0.0, String::new());
    let mut cases = 0;
    for variant in AeVariant::ALL {
        for pairs in 0..=3 {
            for (a, hidden) in Activation::ALL.into_iter().enumerate() {
                for (l, loss) in LossKind::ALL.into_iter().enumerate() {
                    let output = Activation::OUTPUT[(a + l + pairs) % Activation::OUTPUT.len()];
                    let inst = instance(variant, pairs, hidden, output, loss, &mut rng);
                    let err = max_gradient_error(&inst, &hp);
                    cases += 1;
                    if err > worst.0 || err.is_nan() {
                        worst = (err, format!("{variant:?} pairs={pairs} {hidden:?}/{output:?} {loss:?}"));
                    }
                }
            }
        }
    }
    (worst.0, worst.1, cases)
}

pub const METHODS: [&str; 5] = ["de", "es", "exhaustive", "ga", "random"];
pub const DATASETS: [&str; 9] = [
    "cifar10", "delicious", "fashion", "glass", "ionosphere", "mnist", "semeion", "sonar", "spect",
];

/// Summary-of-results "Error (MSE)" column (penalised), rows = datasets,
/// columns = METHODS.
pub fn results_error_column() -> Vec<Vec<f64>> {
    vec![
        vec![0.0137, 0.0133, 0.0395, 0.0131, 0.0260],
        vec![0.0124, 0.0119, 0.0165, 0.0102, 0.0134],
        vec![444.8169, 565.4571, 4180.2370, 1881.0680, 782.3572],
        vec![24.8785, 5.4093, 29.2589, 0.4473, 1.2705],
        vec![0.0740, 0.0931, 0.2099, 0.0917, 0.1049],
        vec![192.5133, 431.6960, 4104.1400, 254.7397, 611.5036],
        vec![0.0459, 0.0355, 0.1940, 0.0376, 0.0604],
        vec![0.0142, 0.0162, 0.0462, 0.0139, 0.0145],
        vec![0.0959, 0.0834, 0.1829, 0.0703, 0.1145],
    ]
}

/// Best raw test MSE block of the averages table, transposed to
/// rows = datasets, columns = METHODS.
pub fn averages_best_block() -> Vec<Vec<f64>> {
    let by_method = [
        [0.0020, 0.0131, 444.7913, 563.1547, 0.0694, 192.4971, 0.0323, 0.0106, 0.0924],
        [0.0080, 0.0080, 565.4449, 316.0380, 0.0963, 431.6296, 0.0221, 0.0128, 0.0806],
        [0.0394, 0.0164, 4180.2370, 576.7005, 0.2098, 4104.1400, 0.1939, 0.0461, 0.1828],
        [0.0090, 0.0055, 1881.0210, 0.4468, 0.0872, 254.7241, 0.0266, 0.0115, 0.0658],
        [0.0047, 0.0021, 782.3502, 564.4037, 0.0980, 564.2114, 0.0339, 0.0114, 0.1098],
    ];
    (0..9).map(|d| by_method.iter().map(|m| m[d]).collect()).collect()
}

/// Published per-dataset ranks, rows = datasets, columns = METHODS.
pub fn published_ranks() -> Vec<Vec<f64>> {
    [
        [1, 3, 5, 4, 2],
        [4, 3, 5, 2, 1],
        [1, 2, 5, 4, 3],
        [3, 2, 5, 1, 4],
        [1, 3, 5, 2, 4],
        [1, 3, 5, 2, 4],
        [3, 1, 5, 2, 4],
        [1, 4, 5, 3, 2],
        [3, 2, 5, 1, 4],
    ]
    .iter()
    .map(|r| r.iter().map(|&v| f64::from(v)).collect())
    .collect()
}

pub const PUBLISHED_AVERAGE_RANKS: [f64; 5] = [2.00, 2.56, 5.00, 2.33, 3.11];
pub const PUBLISHED_FRIEDMAN_P: f64 = 0.0004248178;

pub fn linear_spec(features: usize, coding: usize) -> ArchitectureSpec {
    ArchitectureSpec {
        variant: AeVariant::Basic,
        encoder_units: vec![],
        coding_units: coding,
        encoder_activations: vec![],
        coding_activation: Activation::Linear,
        decoder_activations: vec![],
        output_activation: Activation::Linear,
        loss: LossKind::Mse,
        features,
    }
}

/// Rows `A s + c` with a 2-dimensional latent `s`.
pub fn linear_data(n: usize, features: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Array2::from_shape_simple_fn((features, 2), || rng.random_range(-0.5..0.5));
    let c: Vec<f64> = (0..features).map(|_| rng.random_range(0.2..0.6)).collect();
    Array2::from_shape_fn((n, features), |(i, j)| {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ (i as u64 + 1) << 8);
        let s: [f64; 2] = [r.random(), r.random()];
        c[j] + a[[j, 0]] * s[0] + a[[j, 1]] * s[1]
    })
}
