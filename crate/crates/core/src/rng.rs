//! Seeded random number generation with documented sub-seeding.
//!
//! Identical seed, identical stream. Independent subsystems (weight init,
//! batch shuffling, latent noise, samplers) each take a derived stream so
//! that changing how one subsystem consumes randomness cannot perturb the
//! others.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream labels for [`SeedRng::derive`]. Keep values stable: they are part
/// of the reproducibility contract.
pub mod streams {
    pub const WEIGHT_INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const LATENT_NOISE: u64 = 3;
    pub const SIMPLEX_SAMPLER: u64 = 4;
    pub const DATA_GEN: u64 = 5;
    pub const INIT_PICK: u64 = 6;
    pub const BASELINE: u64 = 7;
}

/// Seed-deterministic generator. Single-owner by contract: concurrent use of
/// one instance is forbidden.
#[derive(Debug, Clone)]
pub struct SeedRng {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl SeedRng {
    pub fn new(seed: u64) -> Self {
        SeedRng { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sub-seeding rule: the derived stream is seeded with
    /// `splitmix64(seed ^ splitmix64(stream))`, so streams for distinct
    /// labels are decorrelated and independent of draw order elsewhere.
    pub fn derive(&self, stream: u64) -> SeedRng {
        SeedRng::new(splitmix64(self.seed ^ splitmix64(stream)))
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform in (0, 1]; safe to take a logarithm of.
    pub fn uniform_open(&mut self) -> f64 {
        1.0 - self.inner.gen::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Standard normal via Box-Muller (kept in-repo so the stream is pinned).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.inner.gen_range(0..=i);
            xs.swap(i, j);
        }
    }
}
