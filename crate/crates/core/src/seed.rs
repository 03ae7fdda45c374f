//! Seed derivation for order-independent parallel randomness.
//!
//! Every random stream in the simulator is keyed by the master seed plus a
//! tuple of indices (patch id, realization, cpi, channel, pulse, ...), so the
//! draws a worker sees never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of indices.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &k| mix(acc ^ mix(k)))
}

/// A ChaCha stream keyed by `derive(master, path)`.
pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

/// Domain tags keep independent subsystems from sharing streams.
pub mod tag {
    pub const PATCH_PHASE: u64 = 1;
    pub const DOPPLER_JITTER: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const OCEAN: u64 = 4;
    pub const SNAPSHOT: u64 = 5;
    pub const PHASE_CODE: u64 = 6;
    pub const ENSEMBLE: u64 = 7;
}
