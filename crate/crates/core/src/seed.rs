//! Seed derivation.
//!
//! Every random stream in a run is keyed by `(base seed, purpose, indices)`
//! rather than drawn sequentially from one generator, so a round can be
//! replayed in isolation (rollback) and client order never perturbs results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const PARTITION: u64 = 3;
    pub const LOCAL_TRAIN: u64 = 4;
    pub const TOPOLOGY: u64 = 5;
    pub const SUBSAMPLE: u64 = 6;
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a base seed with a purpose tag and an index path into a new seed.
pub fn derive(seed: u64, purpose: u64, path: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ splitmix(purpose));
    for &p in path {
        h = splitmix(h ^ splitmix(p.wrapping_add(0x51_7cc1_b727_220a)));
    }
    h
}

pub fn rng(seed: u64, purpose: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, purpose, path))
}
