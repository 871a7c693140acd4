//! Small synthetic datasets: four Gaussian-ish blobs in `[0, 1]^8`.

#![allow(dead_code)]

use dqfl_core::data::Samples;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn blobs(n: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Samples::new(8, 4);
    for i in 0..n {
        let label = i % 4;
        let f: Vec<f64> = (0..8)
            .map(|j| {
                let centre = if j % 4 == label { 0.8 } else { 0.2 };
                (centre + rng.random_range(-0.15..0.15f64)).clamp(0.0, 1.0)
            })
            .collect();
        s.push(&f, label).unwrap();
    }
    s
}

/// `n_clients` shards of `per_client` samples each.
pub fn shards(n_clients: usize, per_client: usize, seed: u64) -> Vec<Samples> {
    (0..n_clients).map(|c| blobs(per_client, seed * 1000 + c as u64)).collect()
}
