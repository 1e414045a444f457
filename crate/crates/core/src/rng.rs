//! Seeded random streams.
//!
//! Every stochastic component draws from xoshiro256++ seeded through
//! SplitMix64, and converts the top 53 bits of each output to a uniform
//! double in `[0, 1)`. Both algorithms are public-domain reference designs, so
//! a stream can be replayed from `(seed, stream id)` in any language.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Stream identifiers, mixed into the seed to get independent streams.
pub mod stream {
    pub const SIMULATOR: u64 = 1;
    pub const ENTROPY: u64 = 2;
    pub const DATA: u64 = 3;
    pub const SPLIT: u64 = 4;
}

/// One SplitMix64 step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a path of identifiers.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRng {
    inner: Xoshiro256PlusPlus,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn derived(base: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(base, path))
    }

    /// Uniform double in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
