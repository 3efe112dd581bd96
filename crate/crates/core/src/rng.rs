//! Deterministic randomness sources.
//!
//! Every generator in this crate draws through [`UniformSource`] so that a run
//! is reproducible from a single seed, and so tests can replay an exact
//! sequence of draws with [`Scripted`].

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// A source of uniform integers.
pub trait UniformSource {
    /// Uniform value in `[low, high]`. Callers guarantee `low <= high`.
    fn uniform_inclusive(&mut self, low: u64, high: u64) -> u64;

    /// Uniform value in `[0, bound)`. Callers guarantee `bound >= 1`.
    fn below(&mut self, bound: u64) -> u64 {
        self.uniform_inclusive(0, bound - 1)
    }
}

/// ChaCha20-backed source, reproducible from a `u64` seed.
#[derive(Debug, Clone)]
pub struct Seeded(ChaCha20Rng);

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha20Rng::seed_from_u64(seed))
    }

    /// Independent stream derived from `seed` and a domain label.
    pub fn derived(seed: u64, label: &str) -> Self {
        Self::new(derive_seed(seed, label))
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.0
    }
}

impl UniformSource for Seeded {
    fn uniform_inclusive(&mut self, low: u64, high: u64) -> u64 {
        self.0.gen_range(low..=high)
    }
}

/// Replays a fixed list of draws. Panics when a scripted value falls outside
/// the requested range or the script runs dry; it is a test fixture.
#[derive(Debug, Clone)]
pub struct Scripted(VecDeque<u64>);

impl Scripted {
    pub fn new(values: impl IntoIterator<Item = u64>) -> Self {
        Self(values.into_iter().collect())
    }

    pub fn remaining(&self) -> usize {
        self.0.len()
    }
}

impl UniformSource for Scripted {
    fn uniform_inclusive(&mut self, low: u64, high: u64) -> u64 {
        let v = self.0.pop_front().expect("scripted source exhausted");
        assert!(
            (low..=high).contains(&v),
            "scripted draw {v} outside [{low}, {high}]"
        );
        v
    }
}

/// Hash a parent seed and a label into a child seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_be_bytes(out[..8].try_into().expect("digest is 32 bytes"))
}
