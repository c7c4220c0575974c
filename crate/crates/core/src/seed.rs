//! Stable seed derivation. Derived seeds must not depend on the platform or
//! the standard library's hasher, so a fixed SplitMix64 finaliser is used.

use crate::genome::Chromosome;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix(splitmix(seed) ^ salt)
}

/// Training seed of an individual: a function of the run seed and the genes
/// only, so evaluation order and caching cannot change the outcome.
pub fn chromosome_seed(master: u64, c: &Chromosome) -> u64 {
    c.genes()
        .iter()
        .fold(splitmix(master), |acc, &g| splitmix(acc ^ u64::from(g)))
}
