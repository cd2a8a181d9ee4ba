//! Counter-based pseudo-random numbers.
//!
//! The generator is SplitMix64 (Steele, Lea and Flood): state advances by
//! the 64-bit golden gamma `0x9E3779B97F4A7C15` and each output is the
//! state passed through the finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! with wrapping multiplication. Streams are keyed by hashing a seed with
//! any number of `u64` keys (frame index, pixel index, ...), so a value
//! never depends on how many draws happened before it. Uniform doubles take
//! the top 53 bits; normal deviates use the Box-Muller transform with
//! `libm` transcendental functions.

use crate::math;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed and a list of keys into a single stream seed.
#[inline]
pub fn hash_keys(seed: u64, keys: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN_GAMMA));
    for &k in keys {
        h = mix64(h ^ k.wrapping_mul(GOLDEN_GAMMA).wrapping_add(0x632B_E59B_D9B4_E019));
    }
    h
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream for `(seed, keys...)`.
    pub fn keyed(seed: u64, keys: &[u64]) -> Self {
        SplitMix64::new(hash_keys(seed, keys))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal deviate (one Box-Muller draw; the sine branch is discarded).
    pub fn next_gaussian(&mut self) -> f64 {
        // 1 - u keeps the argument of ln in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
    }
}

/// A single normal deviate for the given key tuple.
#[inline]
pub fn gaussian_at(seed: u64, keys: &[u64]) -> f64 {
    SplitMix64::keyed(seed, keys).next_gaussian()
}

/// A single uniform `[0,1)` value for the given key tuple.
#[inline]
pub fn uniform_at(seed: u64, keys: &[u64]) -> f64 {
    SplitMix64::keyed(seed, keys).next_f64()
}
