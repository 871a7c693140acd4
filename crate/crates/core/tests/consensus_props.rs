use dqfl_core::fed::{inter_server_consensus, intra_cluster_aggregate, metropolis_weights, ClusterTopology, Topology};
use dqfl_core::ParamVector;
use proptest::prelude::*;

/// Mean with compensated summation, independent of the library's order.
fn reference_mean(models: &[Vec<f64>], coord: usize) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for m in models {
        let y = m[coord] - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / models.len() as f64
}

fn models_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..9, 1usize..40).prop_flat_map(|(s, d)| prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), s))
}

fn pvs(models: &[Vec<f64>]) -> Vec<ParamVector> {
    models.iter().cloned().map(ParamVector).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ring_returns_exact_mean_everywhere(models in models_strategy(), round in 1u64..50) {
        let s = models.len();
        let topo = ClusterTopology::for_round(Topology::Ring, s, round, 0.5, 0).unwrap();
        let out = inter_server_consensus(&pvs(&models), &topo, 5).unwrap();
        prop_assert_eq!(out.messages, (s * (s - 1)) as u64);
        for m in &out.models {
            for (k, v) in m.iter().enumerate() {
                prop_assert!((v - reference_mean(&models, k)).abs() <= 1e-12);
            }
        }
        prop_assert!(out.agreed());
    }

    #[test]
    fn star_counts_two_messages_per_spoke(models in models_strategy(), round in 1u64..50) {
        let s = models.len();
        let topo = ClusterTopology::for_round(Topology::Star, s, round, 0.5, 0).unwrap();
        prop_assert_eq!(topo.star_hub, Some(((round - 1) % s as u64) as usize));
        let out = inter_server_consensus(&pvs(&models), &topo, 5).unwrap();
        prop_assert_eq!(out.messages, 2 * (s as u64 - 1));
        prop_assert!(out.agreed());
        for (k, v) in out.models[0].iter().enumerate() {
            prop_assert!((v - reference_mean(&models, k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn gossip_preserves_the_mean(
        models in models_strategy(),
        round in 1u64..50,
        seed in any::<u64>(),
        p in 0.2f64..=1.0,
        steps in 1usize..12,
    ) {
        let s = models.len();
        let topo = ClusterTopology::for_round(Topology::Random, s, round, p, seed).unwrap();
        prop_assert!(topo.is_connected());
        let out = inter_server_consensus(&pvs(&models), &topo, steps).unwrap();
        prop_assert_eq!(out.messages, 2 * topo.edges.len() as u64 * steps as u64);
        let after: Vec<Vec<f64>> = out.models.iter().map(|m| m.0.clone()).collect();
        for k in 0..models[0].len() {
            prop_assert!((reference_mean(&after, k) - reference_mean(&models, k)).abs() <= 1e-10);
        }
        // a doubly-stochastic step never widens the spread
        for k in 0..models[0].len() {
            let spread = |ms: &[Vec<f64>]| {
                let (lo, hi) = ms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), m| (l.min(m[k]), h.max(m[k])));
                hi - lo
            };
            prop_assert!(spread(&after) <= spread(&models) + 1e-12);
        }
    }

    #[test]
    fn metropolis_rows_and_columns_sum_to_one(s in 2usize..10, seed in any::<u64>(), p in 0.1f64..=1.0) {
        let topo = ClusterTopology::for_round(Topology::Random, s, 1, p, seed).unwrap();
        let w = metropolis_weights(&topo);
        for (i, row) in w.iter().enumerate() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((w.iter().map(|r| r[i]).sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn aggregate_of_identical_models_is_identity(v in prop::collection::vec(-5.0f64..5.0, 1..30), n in 1usize..8, w in 1usize..100) {
        let models = vec![ParamVector(v.clone()); n];
        let out = intra_cluster_aggregate(&models, &vec![w; n]).unwrap();
        for (a, b) in out.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn aggregate_lies_in_the_hull(models in models_strategy(), weights in prop::collection::vec(1usize..50, 8)) {
        let w = &weights[..models.len()];
        let out = intra_cluster_aggregate(&pvs(&models), w).unwrap();
        for (k, v) in out.iter().enumerate() {
            let lo = models.iter().map(|m| m[k]).fold(f64::INFINITY, f64::min);
            let hi = models.iter().map(|m| m[k]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }
}

#[test]
fn single_server_consensus_is_identity() {
    let topo = ClusterTopology::for_round(Topology::Star, 1, 3, 0.5, 0).unwrap();
    let m = vec![ParamVector(vec![0.25, -1.5])];
    let out = inter_server_consensus(&m, &topo, 5).unwrap();
    assert_eq!(out.models, m);
    assert_eq!(out.messages, 0);
}
