use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::genome::{Activation, AeVariant, ArchitectureSpec};

use super::loss::{correntropy_gradient_into, correntropy_loss, loss_gradient_into, loss_unchecked, LOSS_EPSILON};
use super::{NeuralError, VariantParams};

/// One affine layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weights: Array2::zeros((out, inp)),
            bias: Array1::zeros(out),
        }
    }

    fn glorot(out: usize, inp: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (inp + out) as f64).sqrt();
        Self {
            weights: Array2::from_shape_simple_fn((out, inp), || rng.random_range(-bound..=bound)),
            bias: Array1::zeros(out),
        }
    }

    fn affine(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias;
        z
    }
}

/// Trainable tensors of an autoencoder. Layers run encoder (outer to inner),
/// coding, decoder (inner to outer), output. Variational models carry a
/// separate log-variance head parallel to the coding layer. The same type
/// holds gradients and optimizer accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Dense>,
    pub log_var: Option<Dense>,
}

impl ModelParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
            log_var: self
                .log_var
                .as_ref()
                .map(|l| Dense::zeros(l.weights.nrows(), l.weights.ncols())),
        }
    }

    fn tensors(&self) -> impl Iterator<Item = &Dense> {
        self.layers.iter().chain(self.log_var.iter())
    }

    fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.layers.iter_mut().chain(self.log_var.iter_mut())
    }

    pub fn len(&self) -> usize {
        self.tensors().map(|d| d.weights.len() + d.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries, tensor by tensor: weights (row-major) then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for d in self.tensors() {
            out.extend(d.weights.iter());
            out.extend(d.bias.iter());
        }
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for d in self.tensors_mut() {
            for w in d.weights.iter_mut().chain(d.bias.iter_mut()) {
                *w = *it.next().expect("flat vector too short");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .all(|d| d.weights.iter().chain(d.bias.iter()).all(|v| v.is_finite()))
    }

    /// Applies `f(param, grad, acc)` elementwise across three same-shaped sets.
    pub(crate) fn zip_apply(&mut self, grads: &ModelParams, acc: &mut ModelParams, mut f: impl FnMut(&mut f64, f64, &mut f64)) {
        for ((p, g), a) in self.tensors_mut().zip(grads.tensors()).zip(acc.tensors_mut()) {
            Zip::from(&mut p.weights)
                .and(&g.weights)
                .and(&mut a.weights)
                .for_each(|p, &g, a| f(p, g, a));
            Zip::from(&mut p.bias)
                .and(&g.bias)
                .and(&mut a.bias)
                .for_each(|p, &g, a| f(p, g, a));
        }
    }

    fn check_shapes(&self, spec: &ArchitectureSpec) -> Result<(), NeuralError> {
        let sizes = spec.layer_sizes();
        let expected_layers = sizes.len() - 1;
        if self.layers.len() != expected_layers {
            return Err(NeuralError::Shape {
                expected: expected_layers,
                got: self.layers.len(),
            });
        }
        for (k, d) in self.layers.iter().enumerate() {
            if d.weights.dim() != (sizes[k + 1], sizes[k]) || d.bias.len() != sizes[k + 1] {
                return Err(NeuralError::Shape {
                    expected: sizes[k + 1] * sizes[k],
                    got: d.weights.len(),
                });
            }
        }
        let coding = spec.hidden_pairs();
        match (&self.log_var, spec.variant == AeVariant::Variational) {
            (Some(lv), true) if lv.weights.dim() == self.layers[coding].weights.dim() => Ok(()),
            (None, false) => Ok(()),
            _ => Err(NeuralError::Shape {
                expected: usize::from(spec.variant == AeVariant::Variational),
                got: usize::from(self.log_var.is_some()),
            }),
        }
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(spec: &ArchitectureSpec, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = spec.layer_sizes();
    let layers: Vec<Dense> = sizes
        .windows(2)
        .map(|w| Dense::glorot(w[1], w[0], &mut rng))
        .collect();
    let log_var = (spec.variant == AeVariant::Variational).then(|| {
        let coding = spec.hidden_pairs();
        Dense::glorot(sizes[coding + 1], sizes[coding], &mut rng)
    });
    ModelParams { layers, log_var }
}

/// Intermediate values of one forward pass, indexed by layer.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
    pub post: Vec<Array2<f64>>,
    pub log_var: Option<Array2<f64>>,
    pub latent_noise: Option<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("at least one layer")
    }
}

fn ensure_finite(a: &Array2<f64>, layer: usize) -> Result<(), NeuralError> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NeuralError::NonFinite { layer })
    }
}

/// Runs the network on a batch (rows are samples). `latent_noise` switches a
/// variational model into sampling mode; `None` uses the latent mean. Other
/// variants ignore it.
pub fn forward(
    params: &ModelParams,
    spec: &ArchitectureSpec,
    batch: &Array2<f64>,
    latent_noise: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, ForwardCache), NeuralError> {
    if batch.ncols() != spec.features {
        return Err(NeuralError::Shape {
            expected: spec.features,
            got: batch.ncols(),
        });
    }
    params.check_shapes(spec)?;
    let acts = spec.layer_activations();
    let coding = spec.hidden_pairs();
    let variational = spec.variant == AeVariant::Variational;
    let count = params.layers.len();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(count),
        pre: Vec::with_capacity(count),
        post: Vec::with_capacity(count),
        log_var: None,
        latent_noise: None,
    };
    let mut a = batch.clone();
    for (k, layer) in params.layers.iter().enumerate() {
        let z = layer.affine(&a);
        let out = z.mapv(|v| acts[k].apply(v));
        ensure_finite(&out, k + 1)?;
        let next = if k == coding && variational {
            let lv = params.log_var.as_ref().expect("checked shapes").affine(&a);
            ensure_finite(&lv, k + 1)?;
            let sample = match latent_noise {
                Some(noise) => {
                    if noise.dim() != out.dim() {
                        return Err(NeuralError::Shape {
                            expected: out.len(),
                            got: noise.len(),
                        });
                    }
                    cache.latent_noise = Some(noise.clone());
                    &out + &(lv.mapv(|v| (0.5 * v).exp()) * noise)
                }
                None => out.clone(),
            };
            ensure_finite(&sample, k + 1)?;
            cache.log_var = Some(lv);
            sample
        } else {
            out.clone()
        };
        cache.inputs.push(a);
        cache.pre.push(z);
        cache.post.push(out);
        a = next;
    }
    Ok((a, cache))
}

/// Evaluation-mode reconstruction.
pub fn reconstruct(params: &ModelParams, spec: &ArchitectureSpec, batch: &Array2<f64>) -> Result<Array2<f64>, NeuralError> {
    forward(params, spec, batch, None).map(|(out, _)| out)
}

/// Plain MSE over every cell of `data`, evaluation mode.
pub fn reconstruction_mse(params: &ModelParams, spec: &ArchitectureSpec, data: &Array2<f64>) -> Result<f64, NeuralError> {
    let out = reconstruct(params, spec, data)?;
    let mse = (&out - data).mapv(|e| e * e).mean().unwrap_or(0.0);
    if mse.is_finite() {
        Ok(mse)
    } else {
        Err(NeuralError::NonFinite { layer: params.layers.len() })
    }
}

fn clamp_rate(r: f64) -> Option<f64> {
    (LOSS_EPSILON..=1.0 - LOSS_EPSILON).contains(&r).then_some(r)
}

/// Squared Frobenius norm of d(coding)/d(input) for one sample, and when
/// `grads` is given, accumulates `scale *` its gradient: weight terms go into
/// `grads`, pre-activation terms into `direct`.
fn contraction(
    params: &ModelParams,
    acts: &[Activation],
    pre: &[Array2<f64>],
    coding: usize,
    sample: usize,
    grads: Option<(&mut ModelParams, &mut [Array2<f64>], f64)>,
) -> f64 {
    let features = params.layers[0].weights.ncols();
    let mut jac = Array2::<f64>::eye(features);
    let mut stored = Vec::with_capacity(coding + 1);
    for k in 0..=coding {
        let m = params.layers[k].weights.dot(&jac);
        let slope = pre[k].row(sample).mapv(|z| acts[k].derivative(z));
        let next = &m * &slope.view().insert_axis(Axis(1));
        stored.push((jac, m, slope));
        jac = next;
    }
    let value = jac.iter().map(|v| v * v).sum();
    if let Some((grads, direct, scale)) = grads {
        let mut g = jac * (2.0 * scale);
        for k in (0..=coding).rev() {
            let (jk, m, slope) = &stored[k];
            for i in 0..m.nrows() {
                let gd: f64 = g.row(i).iter().zip(m.row(i)).map(|(a, b)| a * b).sum();
                direct[k][[sample, i]] += gd * acts[k].second_derivative(pre[k][[sample, i]]);
            }
            let dg = &g * &slope.view().insert_axis(Axis(1));
            grads.layers[k].weights += &dg.dot(&jk.t());
            g = params.layers[k].weights.t().dot(&dg);
        }
    }
    value
}

fn objective_from_cache(
    params: &ModelParams,
    spec: &ArchitectureSpec,
    target: &Array2<f64>,
    cache: &ForwardCache,
    hp: &VariantParams,
) -> f64 {
    let out = cache.output();
    let n = out.nrows() as f64;
    let recon: f64 = out
        .rows()
        .into_iter()
        .zip(target.rows())
        .map(|(o, y)| {
            let (o, y) = (o.to_vec(), y.to_vec());
            if spec.variant == AeVariant::Robust {
                correntropy_loss(&y, &o, hp.correntropy_sigma)
            } else {
                loss_unchecked(spec.loss, &y, &o)
            }
        })
        .sum::<f64>()
        / n;
    let coding = spec.hidden_pairs();
    let code = &cache.post[coding];
    let extra = match spec.variant {
        AeVariant::Sparse => {
            let rho = hp.sparsity_target;
            let kl: f64 = code
                .mean_axis(Axis(0))
                .expect("non-empty batch")
                .iter()
                .map(|&r| {
                    let r = r.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
                    rho * (rho / r).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - r)).ln()
                })
                .sum();
            hp.sparsity_weight * kl
        }
        AeVariant::Contractive => {
            let acts = spec.layer_activations();
            let total: f64 = (0..out.nrows())
                .map(|s| contraction(params, &acts, &cache.pre, coding, s, None))
                .sum();
            hp.contraction_weight * total / n
        }
        AeVariant::Variational => {
            let lv = cache.log_var.as_ref().expect("variational cache");
            let kl: f64 = Zip::from(code)
                .and(lv)
                .fold(0.0, |acc, &mu, &lv| acc - 0.5 * (1.0 + lv - mu * mu - lv.exp()));
            hp.kl_weight * kl / n
        }
        _ => 0.0,
    };
    recon + extra
}

/// Value of the full training objective: gene-15 loss (or correntropy for the
/// robust variant) averaged over the batch, plus the variant penalty.
pub fn objective(
    params: &ModelParams,
    spec: &ArchitectureSpec,
    input: &Array2<f64>,
    target: &Array2<f64>,
    latent_noise: Option<&Array2<f64>>,
    hp: &VariantParams,
) -> Result<f64, NeuralError> {
    let (_, cache) = forward(params, spec, input, latent_noise)?;
    Ok(objective_from_cache(params, spec, target, &cache, hp))
}

/// Gradient of [`objective`] with respect to every parameter, from a cache
/// produced by [`forward`] on the (possibly corrupted) input.
pub fn backward(
    params: &ModelParams,
    spec: &ArchitectureSpec,
    target: &Array2<f64>,
    cache: &ForwardCache,
    hp: &VariantParams,
) -> Result<ModelParams, NeuralError> {
    let out = cache.output();
    if target.dim() != out.dim() {
        return Err(NeuralError::Shape {
            expected: out.len(),
            got: target.len(),
        });
    }
    let n = out.nrows();
    let inv_n = 1.0 / n as f64;
    let acts = spec.layer_activations();
    let coding = spec.hidden_pairs();
    let mut grads = params.zeros_like();

    let mut d_a = Array2::<f64>::zeros(out.dim());
    let mut row_grad = vec![0.0; out.ncols()];
    for (s, (o, y)) in out.rows().into_iter().zip(target.rows()).enumerate() {
        let (o, y) = (o.to_vec(), y.to_vec());
        if spec.variant == AeVariant::Robust {
            correntropy_gradient_into(&y, &o, hp.correntropy_sigma, &mut row_grad);
        } else {
            loss_gradient_into(spec.loss, &y, &o, &mut row_grad);
        }
        for (d, g) in d_a.row_mut(s).iter_mut().zip(&row_grad) {
            *d = g * inv_n;
        }
    }

    let mut direct: Vec<Array2<f64>> = Vec::new();
    if spec.variant == AeVariant::Contractive {
        direct = cache.pre[..=coding].iter().map(|p| Array2::zeros(p.dim())).collect();
        let scale = hp.contraction_weight * inv_n;
        for s in 0..n {
            contraction(params, &acts, &cache.pre, coding, s, Some((&mut grads, &mut direct, scale)));
        }
    }

    for k in (0..params.layers.len()).rev() {
        let mut d_log_var = None;
        if k == coding {
            match spec.variant {
                AeVariant::Variational => {
                    let lv = cache.log_var.as_ref().expect("variational cache");
                    let mu = &cache.post[k];
                    let mut d_lv = lv.mapv(|v| hp.kl_weight * 0.5 * (v.exp() - 1.0) * inv_n);
                    if let Some(noise) = &cache.latent_noise {
                        Zip::from(&mut d_lv)
                            .and(&d_a)
                            .and(noise)
                            .and(lv)
                            .for_each(|dl, &dz, &e, &v| *dl += dz * e * 0.5 * (0.5 * v).exp());
                    }
                    d_a.scaled_add(hp.kl_weight * inv_n, mu);
                    d_log_var = Some(d_lv);
                }
                AeVariant::Sparse => {
                    let rho = hp.sparsity_target;
                    let means = cache.post[k].mean_axis(Axis(0)).expect("non-empty batch");
                    let col = means.mapv(|r| match clamp_rate(r) {
                        Some(r) => hp.sparsity_weight * (-rho / r + (1.0 - rho) / (1.0 - r)) * inv_n,
                        None => 0.0,
                    });
                    d_a += &col;
                }
                _ => {}
            }
        }
        let mut delta = d_a;
        Zip::from(&mut delta)
            .and(&cache.pre[k])
            .for_each(|d, &z| *d *= acts[k].derivative(z));
        if let Some(dir) = direct.get(k) {
            delta += dir;
        }
        let layer = &params.layers[k];
        grads.layers[k].weights += &delta.t().dot(&cache.inputs[k]);
        grads.layers[k].bias += &delta.sum_axis(Axis(0));
        let mut d_prev = delta.dot(&layer.weights);
        if let Some(d_lv) = d_log_var {
            let head = params.log_var.as_ref().expect("variational params");
            let g = grads.log_var.as_mut().expect("variational grads");
            g.weights += &d_lv.t().dot(&cache.inputs[k]);
            g.bias += &d_lv.sum_axis(Axis(0));
            d_prev += &d_lv.dot(&head.weights);
        }
        d_a = d_prev;
    }
    if !grads.is_finite() {
        return Err(NeuralError::NonFinite { layer: 0 });
    }
    Ok(grads)
}
