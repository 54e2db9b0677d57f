//! Counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a seed and a
//! small tuple of integers (site coordinates, instruction index, replicate
//! number). The generator is SplitMix64: a stream keyed by `seed` returns
//! `mix64(seed + k * GAMMA)` as its `k`-th output, so any entry can be read
//! without touching the others.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (a bijection on `u64`).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an arbitrary tuple of words into one key.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for (i, &w) in words.iter().enumerate() {
        h = mix64(h ^ mix64(w.wrapping_add(GAMMA.wrapping_mul(i as u64 + 1))));
    }
    h
}

/// The `k`-th output of the SplitMix64 stream keyed by `key`.
#[inline]
pub fn stream_at(key: u64, k: u64) -> u64 {
    mix64(key.wrapping_add(k.wrapping_mul(GAMMA)))
}

/// Uniform in [0, 1) from the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed for replicate `r` of a sweep with master seed `master`:
/// `hash_words(&[master, r])`. Stable so that partial sweeps can be resumed.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    hash_words(&[master, replicate])
}

/// Sequential generator for procedures that consume randomness in order
/// (continuous-time chains, ghost walks, bisection probes).
pub fn sequential_rng(seed: u64, domain: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(hash_words(&[seed, domain]))
}

/// Domain separators so that independent streams never share keys.
pub mod domain {
    pub const INSTRUCTIONS: u64 = 0x1157;
    pub const INITIAL: u64 = 0x1417;
    pub const POLICY: u64 = 0x9011;
    pub const RECURSION_Y: u64 = 0x7e51;
    pub const CTMC: u64 = 0xc7c;
    pub const PARTICLE_HOLE: u64 = 0x90e;
    pub const SOC: u64 = 0x50c;
    pub const GHOST: u64 = 0x6057;
    pub const WALKS: u64 = 0xa1c;
    pub const HARNESS: u64 = 0x4a55;
    pub const THINNING: u64 = 0x7410;
}
