use criterion::{criterion_group, criterion_main, Criterion};
use dqfl_core::ledger::{BlockDraft, BlockKind, BlockMetrics, Chain, ParamStore, Tier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn chain(blocks: usize) -> (Chain, ParamStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut store = ParamStore::new();
    let mut c = Chain::new(Tier::Lmuc, "server-0");
    for i in 0..blocks {
        let params: Vec<f64> = (0..96).map(|_| rng.random_range(-1.0..1.0)).collect();
        let draft = BlockDraft {
            kind: BlockKind::LocalUpdate,
            producer: format!("server-0/client-{}", i % 5),
            round: (i / 5) as u64 + 1,
            timestamp: (i / 5) as u64 + 1,
            branch: 0,
            metrics: BlockMetrics {
                loss: 1.0,
                accuracy: 0.5,
            },
        };
        c.append(&mut store, draft, &params).unwrap();
    }
    (c, store)
}

fn ledger(c: &mut Criterion) {
    let (chain, store) = chain(600);
    c.bench_function("verify/600_blocks", |b| b.iter(|| black_box(&chain).verify(&store)));
    c.bench_function("append/100_blocks", |b| b.iter(|| chain_len(100)));
}

fn chain_len(n: usize) -> usize {
    chain(n).0.len()
}

criterion_group!(benches, ledger);
criterion_main!(benches);
