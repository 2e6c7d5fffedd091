//! Counter-based seed derivation.
//!
//! Every random stream is keyed by a tuple such as `(master_seed,
//! geometry_index, realization_index)` or `(realization_seed, slab_index)`
//! and folded through SplitMix64, so results do not depend on the order in
//! which workers pick up realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
