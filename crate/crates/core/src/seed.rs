//! Deterministic seed derivation. Every random stream in the crate is a
//! ChaCha8 generator whose seed is derived from a user seed plus a salt that
//! names the stream, so independent stages never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `salts` into `base`, in order.
pub fn derive_seed(base: u64, salts: &[u64]) -> u64 {
    salts.iter().fold(mix(base), |acc, &s| mix(acc ^ mix(s)))
}

pub fn rng_for(base: u64, salts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, salts))
}

// stream tags
pub(crate) const GENERATE: u64 = 0x67_656e;
pub(crate) const FOLDS: u64 = 0x666f_6c64;
pub(crate) const HOLDOUT: u64 = 0x686f_6c64;
pub(crate) const KMEANS: u64 = 0x6b6d_6e73;
pub(crate) const REFINE: u64 = 0x7265_666e;
pub(crate) const BENCH: u64 = 0x6265_6e63;
