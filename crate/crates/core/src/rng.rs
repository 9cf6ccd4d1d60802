//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from [`Stream`], a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`) seeded with `seed_from_u64`. ChaCha output is
//! specified independently of platform and word size, so masks, fold plans and
//! trained weights reproduce across machines.
//!
//! Uniform reals are `(next_u64() >> 11) * 2^-53`, i.e. 53 random bits in `[0, 1)`.
//! Sub-streams for folds, imputers and trees are keyed with [`derive_seed`] so
//! adding or removing a consumer never shifts another consumer's draws.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller (one value per call, the sine half is dropped).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.0);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }

    /// `m` distinct indices from `[0, n)`, returned in ascending order.
    pub fn subset(&mut self, n: usize, m: usize) -> Vec<usize> {
        let mut idx = rand::seq::index::sample(&mut self.0, n, m.min(n)).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keys a child seed off `base` and an ordered tag list: `base ^ h(tags)`.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let h = tags.iter().fold(0x5851_F42D_4C95_7F2D_u64, |acc, &t| mix(acc ^ mix(t)));
    base ^ h
}

/// Stable 64-bit tag for a string (FNV-1a), for use with [`derive_seed`].
pub fn str_tag(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
