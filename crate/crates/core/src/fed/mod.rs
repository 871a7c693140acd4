//! Federation: clients train locally, each edge server averages its
//! cluster, servers reach consensus over a star, ring or random graph, and
//! every step is recorded on the ledger.

mod baseline;
mod consensus;
mod mlp;
mod run;
mod topology;

pub use baseline::{resume_baseline, run_baseline, CentralData, Experiment, Method, MethodRun};
pub use consensus::{
    inter_server_consensus, intra_cluster_aggregate, metropolis_weights, ordered_mean, ConsensusOutcome,
};
pub use mlp::DenseMlp;
pub use run::{evaluate, Evaluation, Federation, FederationState, RoundMetrics};
pub use topology::{ClusterTopology, Topology};

use crate::error::{Error, Result};

/// Round count of the desk-scale profile.
pub const DESK_ROUNDS: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig {
    pub n_servers: usize,
    pub clients_per_server: usize,
    pub global_rounds: u64,
    pub topology: Topology,
    /// Gossip steps per round, RANDOM only.
    pub gossip_steps: usize,
    pub random_edge_prob: f64,
    pub seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            n_servers: 3,
            clients_per_server: 5,
            global_rounds: 100,
            topology: Topology::Ring,
            gossip_steps: 5,
            random_edge_prob: 0.5,
            seed: 42,
        }
    }
}

impl FederationConfig {
    pub fn n_clients(&self) -> usize {
        self.n_servers * self.clients_per_server
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 || self.clients_per_server == 0 {
            return Err(Error::config("servers and clients per server must be positive"));
        }
        if self.topology != Topology::Star && self.n_servers < 2 {
            return Err(Error::config(format!("{} topology needs at least 2 servers", self.topology)));
        }
        if self.gossip_steps == 0 {
            return Err(Error::config("gossip_steps must be at least 1"));
        }
        if !(self.random_edge_prob > 0.0 && self.random_edge_prob <= 1.0) {
            return Err(Error::config(format!(
                "random_edge_prob {} outside (0, 1]",
                self.random_edge_prob
            )));
        }
        Ok(())
    }
}
