//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the master seed plus a path
//! of integer indices (iteration, stone, instance, force index, episode...),
//! so any single cell of a computation can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `base` together with an ordered list of indices.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_at(base: u64, path: &[u64]) -> Rng {
    rng(derive(base, path))
}

// Stream tags keep unrelated derivations from colliding.
pub(crate) mod tag {
    pub const ITERATION: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const EXPECTED_RETURN: u64 = 3;
    pub const EVAL: u64 = 4;
    pub const INIT_POLICY: u64 = 5;
    pub const SEED_DESIGN: u64 = 6;
    pub const STONE: u64 = 7;
    pub const ES: u64 = 8;
}
