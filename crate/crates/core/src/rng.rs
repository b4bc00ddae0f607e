//! Seeding conventions.
//!
//! Every random draw in the crate comes from a [`SimRng`] (ChaCha8) seeded
//! with a 64-bit integer. Sub-streams are derived with [`derive_seed`], a
//! SplitMix64 mix of `(seed, stream)`. Replicate `i` of a run with base seed
//! `s` always uses `derive_seed(s, i)`, so results do not depend on the
//! number of worker threads or on the order in which replicates finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Seed used when neither a flag nor the environment provides one.
pub const DEFAULT_SEED: u64 = 20_091_117;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(1)))
}

/// Seed used when none is configured; serde default hook.
pub fn default_seed() -> u64 {
    DEFAULT_SEED
}
