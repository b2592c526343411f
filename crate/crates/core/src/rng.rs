//! Counter-based stateless randomness.
//!
//! Every random quantity in the network (synapse targets, delays, stimulus
//! events) is a pure function of the master seed and an integer key tuple, so
//! any worker can regenerate any value without sharing generator state.
//!
//! Construction (fixed; golden outputs depend on it):
//!
//! ```text
//! h0   = mix(seed + G)
//! h_i  = mix((h_{i-1} + G) ^ mix(key_i))      for each key element
//! out  = mix(h_n ^ n)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer and `G = 0x9E3779B97F4A7C15`.
//! `mix` is a bijection on `u64`, so two keys differing only in their last
//! element can never collide.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream tags keep the different uses of the generator apart.
pub mod stream {
    pub const TARGET: u64 = 1;
    pub const DELAY: u64 = 2;
    pub const THALAMIC: u64 = 3;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64 pseudorandom bits for `(master_seed, key)`.
#[inline]
pub fn stateless_u64(master_seed: u64, key: &[u64]) -> u64 {
    let mut h = mix(master_seed.wrapping_add(GOLDEN));
    for &k in key {
        h = mix(h.wrapping_add(GOLDEN) ^ mix(k));
    }
    mix(h ^ key.len() as u64)
}

/// Uniform value in `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn stateless_uniform(master_seed: u64, key: &[u64]) -> f64 {
    (stateless_u64(master_seed, key) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `[0, n)`. `n` must be nonzero.
#[inline]
pub fn stateless_below(master_seed: u64, key: &[u64], n: u32) -> u32 {
    debug_assert!(n > 0);
    // multiply-shift: the high word of a 64x32 product is < n
    (((stateless_u64(master_seed, key) >> 32) * n as u64) >> 32) as u32
}
