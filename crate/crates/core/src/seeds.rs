//! Seed derivation for reproducible randomness.
//!
//! Every random choice in the crate draws from a [`ChaCha8Rng`] whose seed is
//! derived from the single top-level run seed. Stage seeds are derived by
//! label (`stage_seed(seed, "completion.shuffle")`), and per-entity seeds by
//! id (`entity_seed(stage, "p12")`), so results do not depend on declaration
//! order, iteration order, or which other stages ran first.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a hash of a byte string. Stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finalizer. Decorrelates seeds that differ in few bits.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives the seed for a named stage from the top-level run seed.
pub fn stage_seed(base: u64, label: &str) -> u64 {
    splitmix64(base ^ fnv1a64(label.as_bytes()))
}

/// Derives a seed for one entity (participant or statement) within a stage.
///
/// Keying initialization by id rather than by index keeps trained models
/// invariant to the order entities appear in the input files.
pub fn entity_seed(stage: u64, id: &str) -> u64 {
    splitmix64(stage ^ fnv1a64(id.as_bytes()))
}

/// A reproducible generator for the given derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
