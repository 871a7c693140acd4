use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::consensus::{inter_server_consensus, intra_cluster_aggregate, ordered_mean};
use super::topology::ClusterTopology;
use super::FederationConfig;
use crate::data::Samples;
use crate::error::{Error, Result};
use crate::ledger::{
    canonical_serialize, client_id, cross_chain_commit, quorum_commit, rollback, server_id, BlockDraft, BlockKind,
    BlockMetrics, Digest, Ledger, QuorumOutcome,
};
use crate::qnn::{argmax, local_train, Model, ParamVector, TrainConfig, TrainOutcome};
use crate::seed::{self, purpose};

/// Producer id of TASK_PUBLISH and GLOBAL blocks.
pub const CONSENSUS_PRODUCER: &str = "consensus";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Argmax accuracy and mean cross-entropy over `test`.
pub fn evaluate(model: &dyn Model, params: &[f64], test: &Samples) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::data("cannot evaluate on an empty test set"));
    }
    let lps = model.log_probs(params, test)?;
    let mut correct = 0usize;
    let mut loss = 0.0;
    for (i, lp) in lps.iter().enumerate() {
        let label = test.label(i);
        if argmax(lp) == label {
            correct += 1;
        }
        loss -= lp[label];
    }
    let n = test.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
    })
}

/// One row of the run log. Counters are cumulative from the segment start.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub server_accuracy: Vec<f64>,
    pub server_loss: Vec<f64>,
    /// Evaluation of the global model (the server mean when servers disagree).
    pub accuracy: f64,
    pub loss: f64,
    pub messages_sent: u64,
    pub bytes_modeled: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationState {
    /// Last completed round.
    pub round: u64,
    /// Ledger branch this segment writes to.
    pub branch: u64,
    /// Logical clock stamped on blocks.
    pub clock: u64,
    pub server_models: Vec<ParamVector>,
    pub global: ParamVector,
    pub messages_sent: u64,
    pub bytes_modeled: u64,
}

/// Drives rounds for one model over fixed client shards.
///
/// Client `c` of server `s` owns `shards[s * clients_per_server + c]` and
/// trains with a seed derived from `(seed, round, s * clients_per_server + c)`,
/// so results do not depend on the worker count.
pub struct Federation<'a> {
    model: &'a dyn Model,
    config: FederationConfig,
    train: TrainConfig,
    shards: &'a [Samples],
    test: &'a Samples,
    pool: rayon::ThreadPool,
    faults: BTreeSet<(u64, usize)>,
}

impl<'a> Federation<'a> {
    pub fn new(
        model: &'a dyn Model,
        config: FederationConfig,
        train: TrainConfig,
        shards: &'a [Samples],
        test: &'a Samples,
        workers: usize,
    ) -> Result<Self> {
        config.validate()?;
        if shards.len() != config.n_clients() {
            return Err(Error::config(format!(
                "{} shards for {} servers x {} clients",
                shards.len(),
                config.n_servers,
                config.clients_per_server
            )));
        }
        if let Some(i) = shards.iter().position(Samples::is_empty) {
            return Err(Error::data(format!("client shard {i} is empty")));
        }
        if test.is_empty() {
            return Err(Error::data("empty test set"));
        }
        if workers == 0 {
            return Err(Error::config("worker count must be positive"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
        Ok(Federation {
            model,
            config,
            train,
            shards,
            test,
            pool,
            faults: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &FederationConfig {
        &self.config
    }

    /// Makes `server` vote a mismatched digest in `round`.
    pub fn inject_fault(&mut self, round: u64, server: usize) {
        self.faults.insert((round, server));
    }

    fn payload_bytes(&self) -> u64 {
        8 + 8 * self.model.n_params() as u64
    }

    fn evaluate_servers(&self, models: &[ParamVector], global: &ParamVector) -> Result<(Evaluation, Vec<Evaluation>)> {
        let g = evaluate(self.model, global, self.test)?;
        let per_server = models
            .iter()
            .map(|m| if m == global { Ok(g) } else { evaluate(self.model, m, self.test) })
            .collect::<Result<Vec<_>>>()?;
        Ok((g, per_server))
    }

    fn metrics(&self, state: &FederationState, g: Evaluation, per_server: &[Evaluation]) -> RoundMetrics {
        RoundMetrics {
            round: state.round,
            server_accuracy: per_server.iter().map(|e| e.accuracy).collect(),
            server_loss: per_server.iter().map(|e| e.loss).collect(),
            accuracy: g.accuracy,
            loss: g.loss,
            messages_sent: state.messages_sent,
            bytes_modeled: state.bytes_modeled,
        }
    }

    /// Publishes the task and commits `init` as the round-0 GLOBAL model.
    pub fn genesis(&self, init: ParamVector, ledger: &mut Ledger) -> Result<(FederationState, RoundMetrics)> {
        if init.len() != self.model.n_params() {
            return Err(Error::config(format!(
                "initial model has {} parameters, expected {}",
                init.len(),
                self.model.n_params()
            )));
        }
        if ledger.lmucs.len() != self.config.n_servers || !ledger.shard.is_empty() || !ledger.global.is_empty() {
            return Err(Error::protocol("genesis needs an empty ledger sized for the federation"));
        }
        let state = FederationState {
            round: 0,
            branch: 0,
            clock: 0,
            server_models: vec![init.clone(); self.config.n_servers],
            global: init,
            messages_sent: 0,
            bytes_modeled: 0,
        };
        let (g, per_server) = self.evaluate_servers(&state.server_models, &state.global)?;
        let Ledger { global, shard, store, .. } = ledger;
        global.append(store, draft(BlockKind::TaskPublish, CONSENSUS_PRODUCER, &state, 0, BlockMetrics::default()), &state.global)?;
        shard.append(store, draft(BlockKind::Global, CONSENSUS_PRODUCER, &state, 0, block_metrics(g)), &state.global)?;
        let m = self.metrics(&state, g, &per_server);
        Ok((state, m))
    }

    /// Restarts from the GLOBAL model committed for `round` on a new branch.
    /// Counters restart at zero for the new report segment.
    pub fn resume(&self, ledger: &Ledger, round: u64) -> Result<(FederationState, RoundMetrics)> {
        if ledger.lmucs.len() != self.config.n_servers {
            return Err(Error::config(format!(
                "ledger has {} LMUCs, configuration has {} servers",
                ledger.lmucs.len(),
                self.config.n_servers
            )));
        }
        let params = rollback(&ledger.shard, &ledger.store, round)?;
        if params.len() != self.model.n_params() {
            return Err(Error::config("rolled-back model does not match the configured model"));
        }
        let state = FederationState {
            round,
            branch: ledger.latest_branch() + 1,
            clock: ledger.clock(),
            server_models: vec![params.clone(); self.config.n_servers],
            global: params,
            messages_sent: 0,
            bytes_modeled: 0,
        };
        let (g, per_server) = self.evaluate_servers(&state.server_models, &state.global)?;
        let m = self.metrics(&state, g, &per_server);
        Ok((state, m))
    }

    fn train_clients(&self, state: &FederationState, round: u64) -> Result<Vec<TrainOutcome>> {
        let cps = self.config.clients_per_server;
        self.pool.install(|| {
            (0..self.shards.len())
                .into_par_iter()
                .map(|g| {
                    let seed = seed::derive(self.config.seed, purpose::LOCAL_TRAIN, &[round, g as u64]);
                    local_train(self.model, &state.server_models[g / cps], &self.shards[g], &self.train, seed)
                })
                .collect()
        })
    }

    /// Executes round `state.round + 1`. On quorum failure the server models
    /// revert to the last committed GLOBAL model and the round stays open.
    pub fn run_round(&self, state: &mut FederationState, ledger: &mut Ledger) -> Result<RoundMetrics> {
        let cfg = &self.config;
        let (s_count, cps) = (cfg.n_servers, cfg.clients_per_server);
        if ledger.lmucs.len() != s_count {
            return Err(Error::config("ledger does not match the server count"));
        }
        let round = state.round + 1;
        state.clock += 1;
        let topology = ClusterTopology::for_round(cfg.topology, s_count, round, cfg.random_edge_prob, cfg.seed)?;
        let outcomes = self.train_clients(state, round)?;

        let mut intermediates = Vec::with_capacity(s_count);
        {
            let Ledger { shard, lmucs, store, .. } = &mut *ledger;
            for (s, lmuc) in lmucs.iter_mut().enumerate() {
                let cluster = &outcomes[s * cps..(s + 1) * cps];
                let shards = &self.shards[s * cps..(s + 1) * cps];
                let weights: Vec<usize> = shards.iter().map(Samples::len).collect();
                let params: Vec<ParamVector> = cluster.iter().map(|o| o.params.clone()).collect();
                let intermediate = intra_cluster_aggregate(&params, &weights)?;
                for (c, o) in cluster.iter().enumerate() {
                    let m = BlockMetrics {
                        loss: o.loss,
                        accuracy: o.accuracy,
                    };
                    lmuc.append(store, draft(BlockKind::LocalUpdate, &client_id(s, c), state, round, m), &o.params)?;
                }
                let total: usize = weights.iter().sum();
                let mean = |f: fn(&TrainOutcome) -> f64| {
                    cluster.iter().zip(&weights).map(|(o, &w)| f(o) * w as f64).sum::<f64>() / total as f64
                };
                let m = BlockMetrics {
                    loss: mean(|o| o.loss),
                    accuracy: mean(|o| o.accuracy),
                };
                lmuc.append(store, draft(BlockKind::Intermediate, &server_id(s), state, round, m), &intermediate)?;
                intermediates.push(intermediate);
            }
            for (s, lmuc) in lmucs.iter().enumerate() {
                cross_chain_commit(lmuc, shard, store, &server_id(s))?;
            }
        }

        let consensus = inter_server_consensus(&intermediates, &topology, cfg.gossip_steps)?;
        let global = if consensus.agreed() {
            consensus.models[0].clone()
        } else {
            ordered_mean(&consensus.models)
        };
        let messages = 2 * (s_count * cps) as u64 + consensus.messages;
        state.messages_sent += messages;
        state.bytes_modeled += messages * self.payload_bytes();

        let candidate = Digest::of(&canonical_serialize(&global)?);
        let votes: BTreeMap<usize, Digest> = (0..s_count)
            .map(|s| {
                if self.faults.contains(&(round, s)) {
                    let mut forged = global.0.clone();
                    forged[0] += 1.0;
                    canonical_serialize(&forged).map(|b| (s, Digest::of(&b)))
                } else {
                    Ok((s, candidate))
                }
            })
            .collect::<Result<_>>()?;
        if let QuorumOutcome::Rejected { dissenters } = quorum_commit(&candidate, &votes, s_count) {
            let previous = rollback(&ledger.shard, &ledger.store, state.round)?;
            state.server_models = vec![previous.clone(); s_count];
            state.global = previous;
            return Err(Error::Quorum { round, dissenters });
        }

        let (g, per_server) = self.evaluate_servers(&consensus.models, &global)?;
        {
            let Ledger { shard, store, .. } = &mut *ledger;
            shard.append(store, draft(BlockKind::Global, CONSENSUS_PRODUCER, state, round, block_metrics(g)), &global)?;
        }
        state.round = round;
        state.server_models = consensus.models;
        state.global = global;
        Ok(self.metrics(state, g, &per_server))
    }

    /// Genesis followed by `global_rounds` rounds; returns one row per round
    /// including round 0.
    pub fn run(&self, init: ParamVector, ledger: &mut Ledger) -> Result<(FederationState, Vec<RoundMetrics>)> {
        let (mut state, first) = self.genesis(init, ledger)?;
        let mut rows = vec![first];
        for _ in 0..self.config.global_rounds {
            rows.push(self.run_round(&mut state, ledger)?);
        }
        Ok((state, rows))
    }
}

fn draft(kind: BlockKind, producer: &str, state: &FederationState, round: u64, metrics: BlockMetrics) -> BlockDraft {
    BlockDraft {
        kind,
        producer: producer.to_string(),
        round,
        timestamp: state.clock,
        branch: state.branch,
        metrics,
    }
}

fn block_metrics(e: Evaluation) -> BlockMetrics {
    BlockMetrics {
        loss: e.loss,
        accuracy: e.accuracy,
    }
}
