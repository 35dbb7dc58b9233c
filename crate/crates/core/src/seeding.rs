//! Deterministic seed derivation.
//!
//! Every random stream is a `ChaCha8Rng` seeded with
//! `derive_seed(parent, stream) = splitmix64(parent ^ splitmix64(stream))`.
//! Trial `i` of an experiment uses `derive_seed(master, i)`; inside a trial,
//! stream 0 draws the noise realization and stream 1 the photon positions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const REALIZATION_STREAM: u64 = 0;
pub const PHOTON_STREAM: u64 = 1;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(parent ^ splitmix64(stream))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
