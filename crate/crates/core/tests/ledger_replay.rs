mod support {
    pub mod toy;
}

use dqfl_core::fed::{DenseMlp, Federation, FederationConfig, Topology};
use dqfl_core::ledger::{rollback, BlockKind, Ledger};
use dqfl_core::qnn::{Model, TrainConfig};
use dqfl_core::seed;

fn run(topology: Topology, rounds: u64) -> (DenseMlp, FederationConfig, Ledger) {
    let model = DenseMlp::default();
    let config = FederationConfig {
        n_servers: 3,
        clients_per_server: 2,
        global_rounds: rounds,
        topology,
        seed: 21,
        ..FederationConfig::default()
    };
    let shards = support::toy::shards(6, 10, 4);
    let test = support::toy::blobs(20, 4);
    let fed = Federation::new(&model, config.clone(), train(), &shards, &test, 1).unwrap();
    let mut ledger = Ledger::new(3);
    let init = model.init_params(&mut seed::rng(21, seed::purpose::INIT, &[]));
    fed.run(init, &mut ledger).unwrap();
    (model, config, ledger)
}

fn train() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        batch_size: 4,
        lr: 0.02,
    }
}

fn resume(topology: Topology, ledger: &mut Ledger, round: u64, k: u64, seed_value: u64) {
    let (model, mut config, _) = run(topology, 0);
    config.seed = seed_value;
    let shards = support::toy::shards(6, 10, 4);
    let test = support::toy::blobs(20, 4);
    let fed = Federation::new(&model, config, train(), &shards, &test, 1).unwrap();
    let (mut state, _) = fed.resume(ledger, round).unwrap();
    for _ in 0..k {
        fed.run_round(&mut state, ledger).unwrap();
    }
}

#[test]
fn replay_with_original_seed_reproduces_digests() {
    for topology in [Topology::Star, Topology::Ring] {
        let (_, _, mut ledger) = run(topology, 8);
        let original = ledger.global_digests(0);
        for (branch, r) in [(1u64, 0u64), (2, 2), (3, 3)] {
            resume(topology, &mut ledger, r, 5, 21);
            let replay = ledger.global_digests(branch);
            assert_eq!(replay.len(), 5);
            for (round, digest) in replay {
                assert_eq!(digest, original[round as usize].1, "{topology} branch {branch} round {round}");
            }
        }
        assert!(ledger.is_valid());
    }
}

#[test]
fn new_seed_diverges_and_keeps_history() {
    let (_, _, mut ledger) = run(Topology::Ring, 4);
    let before: Vec<_> = ledger.shard.blocks().to_vec();
    resume(Topology::Ring, &mut ledger, 2, 2, 99);
    assert_eq!(&ledger.shard.blocks()[..before.len()], &before[..]);
    let replay = ledger.global_digests(1);
    assert_eq!(replay.len(), 2);
    assert_ne!(replay[0].1, ledger.global_digests(0)[3].1);
    // the latest branch wins when asking for a round's model
    assert_eq!(ledger.shard.global_for_round(3).unwrap().branch, 1);
    assert!(ledger.is_valid());
}

#[test]
fn rollback_bounds() {
    let (_, _, ledger) = run(Topology::Star, 3);
    let first = ledger.shard.blocks().iter().find(|b| b.kind == BlockKind::Global).unwrap();
    assert_eq!(rollback(&ledger.shard, &ledger.store, 0).unwrap(), ledger.store.params(&first.param_digest).unwrap());
    let last = ledger.shard.global_for_round(3).unwrap();
    assert_eq!(rollback(&ledger.shard, &ledger.store, 3).unwrap(), ledger.store.params(&last.param_digest).unwrap());
    assert!(rollback(&ledger.shard, &ledger.store, 4).is_err());
}

#[test]
fn persistence_round_trip() {
    let (_, _, mut ledger) = run(Topology::Random, 3);
    resume(Topology::Random, &mut ledger, 1, 1, 5);
    let dir = tempfile::tempdir().unwrap();
    ledger.save(dir.path()).unwrap();
    let loaded = Ledger::load(dir.path()).unwrap();
    assert_eq!(loaded, ledger);
    assert_eq!(loaded.verify_all(), ledger.verify_all());
    let hashes = |l: &Ledger| l.chains().flat_map(|c| c.blocks().iter().map(|b| b.block_hash)).collect::<Vec<_>>();
    assert_eq!(hashes(&loaded), hashes(&ledger));
}
