use std::fmt;
use std::str::FromStr;

use super::mlp::DenseMlp;
use super::run::{Federation, RoundMetrics};
use super::topology::Topology;
use super::FederationConfig;
use crate::data::{PreparedData, Samples};
use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::qnn::{Model, QnnModel, TrainConfig};
use crate::seed::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    DenseCentral,
    DenseFl,
    QnnCentral,
    QflCentral,
    Dqfl,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::DenseCentral,
        Method::DenseFl,
        Method::QnnCentral,
        Method::QflCentral,
        Method::Dqfl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DenseCentral => "DENSE_CENTRAL",
            Method::DenseFl => "DENSE_FL",
            Method::QnnCentral => "QNN_CENTRAL",
            Method::QflCentral => "QFL_CENTRAL",
            Method::Dqfl => "DQFL",
        }
    }

    pub fn is_quantum(self) -> bool {
        !matches!(self, Method::DenseCentral | Method::DenseFl)
    }

    pub fn is_centralized(self) -> bool {
        matches!(self, Method::DenseCentral | Method::QnnCentral)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown method {s:?}")))
    }
}

/// Training data of the centralized methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralData {
    /// Union of every client shard.
    Pooled,
    /// A single client's shard, by global client index.
    Shard(usize),
}

/// Everything the methods share: data, seeds, hyperparameters and models.
pub struct Experiment<'a> {
    pub data: &'a PreparedData,
    pub federation: FederationConfig,
    pub train: TrainConfig,
    pub qnn: QnnModel,
    pub dense: DenseMlp,
    pub central_data: CentralData,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub metrics: Vec<RoundMetrics>,
    pub ledger: Ledger,
}

/// Runs one method. Centralized methods are a single client on a single
/// server and report zero messages; QFL_CENTRAL and DENSE_FL are one server
/// over every client; DQFL uses the configured federation.
pub fn run_baseline(method: Method, exp: &Experiment<'_>) -> Result<MethodRun> {
    let (model, shards, config) = method_setup(method, exp)?;
    let init = model.init_params(&mut seed::rng(exp.federation.seed, purpose::INIT, &[]));
    let fed = Federation::new(model, config.clone(), exp.train, &shards, &exp.data.test, exp.workers)?;
    let mut ledger = Ledger::new(config.n_servers);
    let (_, mut metrics) = fed.run(init, &mut ledger)?;
    zero_central_traffic(method, &mut metrics);
    Ok(MethodRun {
        method,
        metrics,
        ledger,
    })
}

/// Restarts `method` from the GLOBAL model of `round` in `ledger` and runs
/// `rounds` more rounds on a new branch. Client training uses
/// `exp.federation.seed`; the data in `exp` must be the original split.
/// Returns the resumed round followed by one row per new round.
pub fn resume_baseline(
    method: Method,
    exp: &Experiment<'_>,
    ledger: &mut Ledger,
    round: u64,
    rounds: u64,
) -> Result<Vec<RoundMetrics>> {
    let (model, shards, config) = method_setup(method, exp)?;
    let fed = Federation::new(model, config, exp.train, &shards, &exp.data.test, exp.workers)?;
    let (mut state, first) = fed.resume(ledger, round)?;
    let mut metrics = vec![first];
    for _ in 0..rounds {
        metrics.push(fed.run_round(&mut state, ledger)?);
    }
    zero_central_traffic(method, &mut metrics);
    Ok(metrics)
}

/// The model, client shards and federation shape `method` runs with.
fn method_setup<'e>(method: Method, exp: &'e Experiment<'_>) -> Result<(&'e dyn Model, Vec<Samples>, FederationConfig)> {
    let base = &exp.federation;
    let n_clients = base.n_clients();
    if exp.data.shards.len() != n_clients {
        return Err(Error::config(format!(
            "{} prepared shards for {n_clients} clients",
            exp.data.shards.len()
        )));
    }
    let model: &dyn Model = if method.is_quantum() { &exp.qnn } else { &exp.dense };
    let (shards, config) = match method {
        Method::DenseCentral | Method::QnnCentral => {
            let data = match exp.central_data {
                CentralData::Pooled => exp.data.pooled(),
                CentralData::Shard(i) => exp
                    .data
                    .shards
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::config(format!("no client shard {i}")))?,
            };
            (vec![data], single_server(base, 1))
        }
        Method::DenseFl | Method::QflCentral => (exp.data.shards.clone(), single_server(base, n_clients)),
        Method::Dqfl => (exp.data.shards.clone(), base.clone()),
    };
    Ok((model, shards, config))
}

fn zero_central_traffic(method: Method, metrics: &mut [RoundMetrics]) {
    if method.is_centralized() {
        for m in metrics {
            m.messages_sent = 0;
            m.bytes_modeled = 0;
        }
    }
}

fn single_server(base: &FederationConfig, clients: usize) -> FederationConfig {
    FederationConfig {
        n_servers: 1,
        clients_per_server: clients,
        topology: Topology::Star,
        ..base.clone()
    }
}
