//! Benchmarks live in `benches/`; this crate only exposes shared fixtures.

use dqfl_core::data::Samples;
use dqfl_core::qnn::QnnModel;
use dqfl_core::{CircuitSpec, EncodingLayout, NoiseConfig};

/// The default 4-qubit, 6-layer model with default noise.
pub fn default_model() -> QnnModel {
    QnnModel::new(CircuitSpec::default(), EncodingLayout::default(), NoiseConfig::default(), 4)
        .expect("default model is valid")
}

/// `n` deterministic samples with features in `[0, 1]`.
pub fn samples(n: usize) -> Samples {
    let mut s = Samples::new(8, 4);
    for i in 0..n {
        let f: Vec<f64> = (0..8).map(|j| ((i * 31 + j * 17) % 101) as f64 / 100.0).collect();
        s.push(&f, i % 4).expect("valid sample");
    }
    s
}
