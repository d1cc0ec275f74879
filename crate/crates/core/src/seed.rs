//! Seed derivation for order-independent ensembles.
//!
//! Realization `i` of an ensemble with master seed `m` draws its disorder from
//! a ChaCha8 stream keyed by `derive_seed(m, i)`. Because the derived seed is a
//! pure function of `(m, i)`, realizations can be evaluated in any order and
//! on any number of threads without changing a single bit of the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator behind every disorder draw. Changing either the
/// generator or the mixing function below is a breaking change to all stored
/// results.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.9) keyed by SplitMix64-mixed seeds";

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (Steele, Lea & Flood).
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child stream `index` of `parent`.
#[inline]
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA)))
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
