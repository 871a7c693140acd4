use criterion::{criterion_group, criterion_main, Criterion};
use dqfl_bench::{default_model, samples};
use dqfl_core::qnn::{local_train, Model, TrainConfig};
use dqfl_core::qsim::{run_circuit, simulate_dense};
use dqfl_core::seed;
use std::hint::black_box;

fn circuit(c: &mut Criterion) {
    let model = default_model();
    let params = model.init_params(&mut seed::rng(1, seed::purpose::INIT, &[]));
    let x = model.layout().encode(&[0.3; 8]).unwrap();
    let circ = model.circuit();
    c.bench_function("forward/pauli", |b| {
        b.iter(|| run_circuit(black_box(&params), black_box(&x), circ, model.noise()).unwrap())
    });
    c.bench_function("forward/dense", |b| {
        b.iter(|| simulate_dense(black_box(&params), black_box(&x), circ, model.noise()).unwrap())
    });
    c.bench_function("gradient/sample", |b| {
        b.iter(|| model.sample_gradient(black_box(&params), &[0.3; 8], 1).unwrap())
    });
    let data = samples(32);
    let batch: Vec<usize> = (0..32).collect();
    c.bench_function("gradient/batch32", |b| {
        b.iter(|| model.batch_gradient(black_box(&params), &data, &batch).unwrap())
    });
    let shard = samples(128);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    c.bench_function("local_train/128x1epoch", |b| {
        b.iter(|| local_train(&model, &params, &shard, &cfg, 3).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = circuit
}
criterion_main!(benches);
