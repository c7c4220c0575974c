//! Evolutionary search over dense autoencoder architectures.
//!
//! Each candidate is a 15-gene integer [`genome::Chromosome`] that fixes the
//! AE variant, depth, widths, activations and training loss. Candidates are
//! trained from scratch ([`neural`]), scored by training MSE plus a complexity
//! penalty ([`fitness`]) and explored by genetic, evolution-strategy,
//! differential-evolution, exhaustive and random search ([`strategies`]).

pub mod data;
pub mod fitness;
pub mod genome;
pub mod harness;
pub mod neural;
pub mod seed;
pub mod strategies;
