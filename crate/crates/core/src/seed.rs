//! Deterministic seed derivation.
//!
//! Parallel work (per-learner training, sweep entries, bootstrap draws) must
//! be reproducible regardless of worker count, so every unit of work derives
//! its own RNG seed from the base seed and its index instead of sharing a
//! stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for work unit `index` under `base`.
pub fn derive(base: u64, index: u64) -> u64 {
    mix(base ^ mix(index.wrapping_add(1)))
}

/// Seeded RNG with a stable algorithm (ChaCha8), so identical seeds give
/// identical draws on every platform and rand release.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for work unit `index` under `base`.
pub fn rng_for(base: u64, index: u64) -> ChaCha8Rng {
    rng(derive(base, index))
}
