//! Seeding rules.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded through
//! `ChaCha8Rng::seed_from_u64`. Child seeds are derived from a parent seed
//! and an index with [`derive_seed`]:
//!
//! ```text
//! derive_seed(parent, i) = mix64(mix64(parent) + GOLDEN_GAMMA * (i + 1))   (wrapping u64)
//! ```
//!
//! where `mix64` is the SplitMix64 output finalizer. Dataset record `i` uses
//! `derive_seed(master_seed, i)`; the noise of a record uses
//! `derive_seed(record_seed, NOISE_STREAM)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weyl increment of SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Index reserved for the per-sample noise stream of a record.
pub const NOISE_STREAM: u64 = 0x4E4F_4953_45; // "NOISE"

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent).wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// The generator used for every stream.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
