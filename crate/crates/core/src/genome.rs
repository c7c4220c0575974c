//! Integer chromosome encoding of a complete autoencoder architecture.
//!
//! A chromosome holds 15 genes laid out in six groups:
//!
//! | gene  | meaning                                   | range   |
//! |-------|-------------------------------------------|---------|
//! | 1     | AE variant                                | 1..=6   |
//! | 2     | hidden layer pairs                        | 0..=3   |
//! | 3-6   | units (outer to inner, 6 = coding length) | 1..=f   |
//! | 7-13  | hidden/coding activations                 | 1..=8   |
//! | 14    | output activation                         | 1..=4   |
//! | 15    | training loss                             | 1..=5   |
//!
//! Hidden pairs consume unit genes 3.. and encoder activation genes 7..
//! from the outside in; gene 10 is always the coding activation and decoder
//! activations start at gene 11. Genes not consumed by the current layer
//! count are dormant: they ride along through crossover and mutation but do
//! not influence validity or decoding.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GENE_COUNT: usize = 15;
pub const MAX_HIDDEN_PAIRS: usize = 3;

pub const TYPE_GENE: usize = 0;
pub const LAYERS_GENE: usize = 1;
pub const FIRST_UNIT_GENE: usize = 2;
pub const CODING_GENE: usize = 5;
pub const FIRST_ENCODER_ACT_GENE: usize = 6;
pub const CODING_ACT_GENE: usize = 9;
pub const FIRST_DECODER_ACT_GENE: usize = 10;
pub const OUTPUT_ACT_GENE: usize = 13;
pub const LOSS_GENE: usize = 14;

/// Exclusive end indices of the six gene groups; the first five are the
/// crossover cut points.
pub const GROUP_ENDS: [usize; 6] = [1, 2, 6, 13, 14, 15];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenomeError {
    #[error("invalid dataset: feature count must be at least 1, got {0}")]
    InvalidDataset(usize),
    #[error("gene {gene} value {value} outside [{lo}, {hi}]")]
    OutOfBounds {
        gene: usize,
        value: u32,
        lo: u32,
        hi: u32,
    },
    #[error("cannot parse chromosome: {0}")]
    Parse(String),
    #[error("structurally invalid chromosome {0}: unit genes must be non-increasing outer to inner")]
    DecodeInvalid(Chromosome),
    #[error("invalid bounds for gene {gene}: [{lo}, {hi}]")]
    BadBounds { gene: usize, lo: u32, hi: u32 },
}

pub type Result<T, E = GenomeError> = std::result::Result<T, E>;

/// Inclusive per-gene bounds. Unit genes are bounded by the feature count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneBounds {
    lo: [u32; GENE_COUNT],
    hi: [u32; GENE_COUNT],
    features: usize,
}

impl GeneBounds {
    pub fn for_features(features: usize) -> Result<Self> {
        if features < 1 {
            return Err(GenomeError::InvalidDataset(features));
        }
        let f = u32::try_from(features).map_err(|_| GenomeError::InvalidDataset(features))?;
        let mut lo = [1; GENE_COUNT];
        let mut hi = [0; GENE_COUNT];
        hi[TYPE_GENE] = 6;
        lo[LAYERS_GENE] = 0;
        hi[LAYERS_GENE] = MAX_HIDDEN_PAIRS as u32;
        for h in &mut hi[FIRST_UNIT_GENE..=CODING_GENE] {
            *h = f;
        }
        for h in &mut hi[FIRST_ENCODER_ACT_GENE..OUTPUT_ACT_GENE] {
            *h = 8;
        }
        hi[OUTPUT_ACT_GENE] = 4;
        hi[LOSS_GENE] = 5;
        Ok(Self { lo, hi, features })
    }

    /// Narrows one gene's range. The new range must sit inside the current one.
    pub fn restrict(mut self, gene: usize, lo: u32, hi: u32) -> Result<Self> {
        if gene >= GENE_COUNT || lo > hi || lo < self.lo[gene] || hi > self.hi[gene] {
            return Err(GenomeError::BadBounds { gene, lo, hi });
        }
        self.lo[gene] = lo;
        self.hi[gene] = hi;
        Ok(self)
    }

    pub fn lo(&self, gene: usize) -> u32 {
        self.lo[gene]
    }

    pub fn hi(&self, gene: usize) -> u32 {
        self.hi[gene]
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn lower(&self) -> Chromosome {
        Chromosome(self.lo)
    }

    pub fn contains(&self, c: &Chromosome) -> bool {
        self.check(&c.0).is_ok()
    }

    fn check(&self, genes: &[u32; GENE_COUNT]) -> Result<()> {
        for (i, &g) in genes.iter().enumerate() {
            if g < self.lo[i] || g > self.hi[i] {
                return Err(GenomeError::OutOfBounds {
                    gene: i + 1,
                    value: g,
                    lo: self.lo[i],
                    hi: self.hi[i],
                });
            }
        }
        Ok(())
    }
}

/// Fixed-length integer genome. Always within the bounds it was built for;
/// structural validity is a separate predicate ([`Chromosome::is_valid`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome([u32; GENE_COUNT]);

impl Chromosome {
    pub fn new(genes: [u32; GENE_COUNT], bounds: &GeneBounds) -> Result<Self> {
        bounds.check(&genes)?;
        Ok(Self(genes))
    }

    /// Parses the textual form `"5,3,37,32,1,8,2,2,4,3,4,2,2,1,1"`.
    pub fn parse(text: &str, bounds: &GeneBounds) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != GENE_COUNT {
            return Err(GenomeError::Parse(format!(
                "expected {GENE_COUNT} comma-separated genes, found {}",
                parts.len()
            )));
        }
        let mut genes = [0u32; GENE_COUNT];
        for (g, p) in genes.iter_mut().zip(&parts) {
            *g = p
                .parse()
                .map_err(|_| GenomeError::Parse(format!("'{p}' is not a non-negative integer")))?;
        }
        Self::new(genes, bounds)
    }

    /// Uniform draw of every gene within its bounds.
    pub fn random<R: Rng + ?Sized>(bounds: &GeneBounds, rng: &mut R) -> Self {
        let mut genes = [0u32; GENE_COUNT];
        for (i, g) in genes.iter_mut().enumerate() {
            *g = rng.random_range(bounds.lo[i]..=bounds.hi[i]);
        }
        Self(genes)
    }

    pub fn genes(&self) -> &[u32; GENE_COUNT] {
        &self.0
    }

    pub fn gene(&self, index: usize) -> u32 {
        self.0[index]
    }

    pub fn hidden_pairs(&self) -> usize {
        self.0[LAYERS_GENE] as usize
    }

    pub fn coding_units(&self) -> usize {
        self.0[CODING_GENE] as usize
    }

    /// Units of the used layers from the outermost hidden layer to the coding layer.
    fn used_units(&self) -> impl Iterator<Item = u32> + '_ {
        let pairs = self.hidden_pairs();
        self.0[FIRST_UNIT_GENE..FIRST_UNIT_GENE + pairs]
            .iter()
            .copied()
            .chain(std::iter::once(self.0[CODING_GENE]))
    }

    /// True when the used unit genes never grow towards the coding layer.
    pub fn is_valid(&self) -> bool {
        let units: Vec<u32> = self.used_units().collect();
        units.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn decode(&self, features: usize) -> Result<ArchitectureSpec> {
        GeneBounds::for_features(features)?.check(&self.0)?;
        if !self.is_valid() {
            return Err(GenomeError::DecodeInvalid(*self));
        }
        let pairs = self.hidden_pairs();
        let act = |i: usize| Activation::from_code(self.0[i]).expect("bounded activation gene");
        Ok(ArchitectureSpec {
            variant: AeVariant::from_code(self.0[TYPE_GENE]).expect("bounded type gene"),
            encoder_units: self.0[FIRST_UNIT_GENE..FIRST_UNIT_GENE + pairs]
                .iter()
                .map(|&u| u as usize)
                .collect(),
            coding_units: self.coding_units(),
            encoder_activations: (0..pairs).map(|k| act(FIRST_ENCODER_ACT_GENE + k)).collect(),
            coding_activation: act(CODING_ACT_GENE),
            decoder_activations: (0..pairs).map(|k| act(FIRST_DECODER_ACT_GENE + k)).collect(),
            output_activation: Activation::from_output_code(self.0[OUTPUT_ACT_GENE])
                .expect("bounded output gene"),
            loss: LossKind::from_code(self.0[LOSS_GENE]).expect("bounded loss gene"),
            features,
        })
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl Serialize for Chromosome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AeVariant {
    Basic,
    Denoising,
    Contractive,
    Robust,
    Sparse,
    Variational,
}

impl AeVariant {
    pub const ALL: [AeVariant; 6] = [
        AeVariant::Basic,
        AeVariant::Denoising,
        AeVariant::Contractive,
        AeVariant::Robust,
        AeVariant::Sparse,
        AeVariant::Variational,
    ];

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn code(self) -> u32 {
        Self::ALL.iter().position(|&v| v == self).unwrap() as u32 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Sigmoid,
    Tanh,
    Relu,
    Selu,
    Elu,
    Softplus,
    Softsign,
}

impl Activation {
    pub const ALL: [Activation; 8] = [
        Activation::Linear,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::Selu,
        Activation::Elu,
        Activation::Softplus,
        Activation::Softsign,
    ];

    /// Activations allowed on the output layer, in gene-14 order.
    pub const OUTPUT: [Activation; 4] = [
        Activation::Linear,
        Activation::Relu,
        Activation::Elu,
        Activation::Softplus,
    ];

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn code(self) -> u32 {
        Self::ALL.iter().position(|&a| a == self).unwrap() as u32 + 1
    }

    pub fn from_output_code(code: u32) -> Option<Self> {
        Self::OUTPUT.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn output_code(self) -> Option<u32> {
        Self::OUTPUT
            .iter()
            .position(|&a| a == self)
            .map(|p| p as u32 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Mae,
    Mape,
    Bce,
    CosineProximity,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Mse,
        LossKind::Mae,
        LossKind::Mape,
        LossKind::Bce,
        LossKind::CosineProximity,
    ];

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn code(self) -> u32 {
        Self::ALL.iter().position(|&l| l == self).unwrap() as u32 + 1
    }
}

/// Decoded, symmetric network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub variant: AeVariant,
    /// Hidden widths from the outermost layer inwards, coding excluded.
    pub encoder_units: Vec<usize>,
    pub coding_units: usize,
    pub encoder_activations: Vec<Activation>,
    pub coding_activation: Activation,
    /// Activations of the mirrored decoder layers, innermost first.
    pub decoder_activations: Vec<Activation>,
    pub output_activation: Activation,
    pub loss: LossKind,
    pub features: usize,
}

impl ArchitectureSpec {
    pub fn hidden_pairs(&self) -> usize {
        self.encoder_units.len()
    }

    /// Every layer width from input to output: `2 * pairs + 3` entries.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.features];
        sizes.extend(&self.encoder_units);
        sizes.push(self.coding_units);
        sizes.extend(self.encoder_units.iter().rev());
        sizes.push(self.features);
        sizes
    }

    /// Hidden layout in the "37, 32, 8, 32, 37" style (input/output omitted).
    pub fn hidden_layout(&self) -> String {
        let sizes = self.layer_sizes();
        sizes[1..sizes.len() - 1]
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Activation of each trainable layer: encoder, coding, decoder, output.
    pub fn layer_activations(&self) -> Vec<Activation> {
        let mut acts = self.encoder_activations.clone();
        acts.push(self.coding_activation);
        acts.extend(&self.decoder_activations);
        acts.push(self.output_activation);
        acts
    }

    /// Checks symmetry, width ordering and the output-activation set.
    pub fn validate(&self) -> Result<()> {
        let pairs = self.hidden_pairs();
        let consistent = pairs <= MAX_HIDDEN_PAIRS
            && self.encoder_activations.len() == pairs
            && self.decoder_activations.len() == pairs
            && self.output_activation.output_code().is_some()
            && self.coding_units >= 1;
        let mut widths = vec![self.features];
        widths.extend(&self.encoder_units);
        widths.push(self.coding_units);
        if !consistent || widths.windows(2).any(|w| w[0] < w[1]) {
            return Err(GenomeError::Parse(format!("inconsistent architecture {self:?}")));
        }
        Ok(())
    }

    /// Writes the used gene positions; dormant positions take their lower bound.
    pub fn encode(&self) -> Result<Chromosome> {
        self.validate()?;
        let bounds = GeneBounds::for_features(self.features)?;
        let mut genes = *bounds.lower().genes();
        let pairs = self.hidden_pairs();
        genes[TYPE_GENE] = self.variant.code();
        genes[LAYERS_GENE] = pairs as u32;
        for k in 0..pairs {
            genes[FIRST_UNIT_GENE + k] = self.encoder_units[k] as u32;
            genes[FIRST_ENCODER_ACT_GENE + k] = self.encoder_activations[k].code();
            genes[FIRST_DECODER_ACT_GENE + k] = self.decoder_activations[k].code();
        }
        genes[CODING_GENE] = self.coding_units as u32;
        genes[CODING_ACT_GENE] = self.coding_activation.code();
        genes[OUTPUT_ACT_GENE] = self.output_activation.output_code().unwrap();
        genes[LOSS_GENE] = self.loss.code();
        Chromosome::new(genes, &bounds)
    }
}

/// Gene indices read by [`Chromosome::decode`] for a given number of hidden pairs.
pub fn used_positions(pairs: usize) -> Vec<usize> {
    let mut pos = vec![TYPE_GENE, LAYERS_GENE];
    pos.extend(FIRST_UNIT_GENE..FIRST_UNIT_GENE + pairs);
    pos.push(CODING_GENE);
    pos.extend(FIRST_ENCODER_ACT_GENE..FIRST_ENCODER_ACT_GENE + pairs);
    pos.push(CODING_ACT_GENE);
    pos.extend(FIRST_DECODER_ACT_GENE..FIRST_DECODER_ACT_GENE + pairs);
    pos.extend([OUTPUT_ACT_GENE, LOSS_GENE]);
    pos
}

/// Complexity term of the fitness function: `alpha * layers * coding_units`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTerm {
    pub layers: usize,
    pub coding_units: usize,
    pub alpha: f64,
}

impl ComplexityTerm {
    pub fn of(c: &Chromosome, alpha: f64) -> Self {
        Self {
            layers: c.hidden_pairs(),
            coding_units: c.coding_units(),
            alpha,
        }
    }

    pub fn value(&self) -> f64 {
        self.alpha * (self.layers * self.coding_units) as f64
    }
}

pub fn random_chromosome<R: Rng + ?Sized>(features: usize, rng: &mut R) -> Result<Chromosome> {
    Ok(Chromosome::random(&GeneBounds::for_features(features)?, rng))
}

/// Resamples each gene with probability `p` from its range minus the current value.
pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    p: f64,
    bounds: &GeneBounds,
    rng: &mut R,
) -> Chromosome {
    let mut genes = c.0;
    for (i, g) in genes.iter_mut().enumerate() {
        let span = bounds.hi[i] - bounds.lo[i];
        if rng.random::<f64>() < p && span > 0 {
            let draw = bounds.lo[i] + rng.random_range(0..span);
            *g = if draw >= *g { draw + 1 } else { draw };
        }
    }
    Chromosome(genes)
}

/// Multi-point crossover on the group boundaries; `cuts[k]` activates the
/// boundary after group `k`.
pub fn crossover_with_cuts(a: &Chromosome, b: &Chromosome, cuts: [bool; 5]) -> (Chromosome, Chromosome) {
    let (mut x, mut y) = (a.0, b.0);
    let mut swapped = false;
    let mut start = 0;
    for (group, &end) in GROUP_ENDS.iter().enumerate() {
        if group > 0 && cuts[group - 1] {
            swapped = !swapped;
        }
        if swapped {
            x[start..end].copy_from_slice(&b.0[start..end]);
            y[start..end].copy_from_slice(&a.0[start..end]);
        }
        start = end;
    }
    (Chromosome(x), Chromosome(y))
}

pub fn crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rng: &mut R) -> (Chromosome, Chromosome) {
    let mut cuts = [false; 5];
    for c in &mut cuts {
        *c = rng.random_bool(0.5);
    }
    crossover_with_cuts(a, b, cuts)
}

/// Min-max normalises every gene to `[0, 1]`; fixed genes map to 0.
pub fn to_unit_vector(c: &Chromosome, bounds: &GeneBounds) -> [f64; GENE_COUNT] {
    let mut v = [0.0; GENE_COUNT];
    for (i, x) in v.iter_mut().enumerate() {
        let (lo, hi) = (bounds.lo[i], bounds.hi[i]);
        if hi > lo {
            *x = f64::from(c.0[i] - lo) / f64::from(hi - lo);
        }
    }
    v
}

/// Clamps to `[0, 1]` (NaN reads as 0) and rounds back onto the gene grid.
pub fn from_unit_vector(v: &[f64; GENE_COUNT], bounds: &GeneBounds) -> Chromosome {
    let mut genes = [0u32; GENE_COUNT];
    for (i, g) in genes.iter_mut().enumerate() {
        let t = if v[i].is_nan() { 0.0 } else { v[i].clamp(0.0, 1.0) };
        let (lo, hi) = (bounds.lo[i], bounds.hi[i]);
        let x = (f64::from(lo) + t * f64::from(hi - lo)).round() as u32;
        *g = x.clamp(lo, hi);
    }
    Chromosome(genes)
}

/// Size of the search space with the unit genes left out, for arbitrary
/// option counts per gene group.
pub fn free_combinations(
    variants: u128,
    layer_options: u128,
    activations: u128,
    output_activations: u128,
    losses: u128,
) -> u128 {
    variants * layer_options * activations.pow(7) * output_activations * losses
}

/// `6 × 4 × 8^7 × 4 × 5`.
pub fn architecture_free_combinations() -> u128 {
    free_combinations(6, 4, 8, 4, 5)
}

/// Number of non-increasing `(pairs + 1)`-tuples over `1..=features`,
/// i.e. `C(features + pairs, pairs + 1)`.
pub fn count_valid_unit_assignments(features: usize, pairs: usize) -> u128 {
    let n = (features + pairs) as u128;
    let k = (pairs + 1) as u128;
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}
