use super::topology::{ClusterTopology, Topology};
use crate::error::{Error, Result};
use crate::qnn::ParamVector;

/// Sample-count-weighted coordinate mean. Equal weights reduce to the plain
/// sum-then-divide mean, accumulated in list order.
pub fn intra_cluster_aggregate(client_params: &[ParamVector], weights: &[usize]) -> Result<ParamVector> {
    let first = client_params
        .first()
        .ok_or_else(|| Error::config("no client models to aggregate"))?;
    if weights.len() != client_params.len() {
        return Err(Error::config(format!(
            "{} weights for {} client models",
            weights.len(),
            client_params.len()
        )));
    }
    let dim = first.len();
    if let Some(p) = client_params.iter().find(|p| p.len() != dim) {
        return Err(Error::config(format!("client model of length {} among length {dim}", p.len())));
    }
    let total: usize = weights.iter().sum();
    if total == 0 {
        return Err(Error::config("aggregation weights sum to zero"));
    }
    let mut out = vec![0.0; dim];
    if weights.iter().all(|&w| w == weights[0]) {
        for p in client_params {
            out.iter_mut().zip(p.iter()).for_each(|(o, v)| *o += v);
        }
        let n = client_params.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    } else {
        for (p, &w) in client_params.iter().zip(weights) {
            let w = w as f64;
            out.iter_mut().zip(p.iter()).for_each(|(o, v)| *o += w * v);
        }
        let total = total as f64;
        out.iter_mut().for_each(|o| *o /= total);
    }
    Ok(ParamVector(out))
}

/// Server models after consensus and the model messages it took.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOutcome {
    pub models: Vec<ParamVector>,
    pub messages: u64,
}

impl ConsensusOutcome {
    /// Whether every server holds a bitwise-identical model.
    pub fn agreed(&self) -> bool {
        self.models.windows(2).all(|w| w[0] == w[1])
    }
}

/// Runs one consensus invocation over the servers' intermediate models.
///
/// * STAR: the hub gathers `S - 1` models, averages in server-id order and
///   broadcasts `S - 1` copies.
/// * RING: `S - 1` forwarding passes in which every server sends one model
///   to its successor, after which each server holds all `S` models and
///   averages them in server-id order: `S (S - 1)` messages, identical results.
/// * RANDOM: `steps` synchronous Metropolis-Hastings gossip steps, two
///   messages per edge per step; servers generally end unequal.
pub fn inter_server_consensus(
    intermediate: &[ParamVector],
    topology: &ClusterTopology,
    steps: usize,
) -> Result<ConsensusOutcome> {
    let s = intermediate.len();
    if s != topology.n_servers {
        return Err(Error::config(format!(
            "{s} server models for a {}-server topology",
            topology.n_servers
        )));
    }
    let dim = intermediate.first().map_or(0, |p| p.len());
    if intermediate.iter().any(|p| p.len() != dim) {
        return Err(Error::config("server models differ in length"));
    }
    if s == 1 {
        return Ok(ConsensusOutcome {
            models: intermediate.to_vec(),
            messages: 0,
        });
    }
    let s64 = s as u64;
    match topology.kind {
        Topology::Star | Topology::Ring => {
            let mean = ordered_mean(intermediate);
            let messages = match topology.kind {
                Topology::Star => 2 * (s64 - 1),
                _ => s64 * (s64 - 1),
            };
            Ok(ConsensusOutcome {
                models: vec![mean; s],
                messages,
            })
        }
        Topology::Random => {
            if !topology.is_connected() {
                return Err(Error::Internal("gossip on a disconnected graph".into()));
            }
            if steps == 0 {
                return Err(Error::config("gossip needs at least one step"));
            }
            let w = metropolis_weights(topology);
            let mut x: Vec<Vec<f64>> = intermediate.iter().map(|p| p.0.clone()).collect();
            for _ in 0..steps {
                let next: Vec<Vec<f64>> = (0..s)
                    .map(|i| {
                        let mut v: Vec<f64> = x[i].iter().map(|a| w[i][i] * a).collect();
                        for j in topology.neighbors(i) {
                            v.iter_mut().zip(&x[j]).for_each(|(o, a)| *o += w[i][j] * a);
                        }
                        v
                    })
                    .collect();
                x = next;
            }
            Ok(ConsensusOutcome {
                models: x.into_iter().map(ParamVector).collect(),
                messages: 2 * topology.edges.len() as u64 * steps as u64,
            })
        }
    }
}

/// `w_ij = 1 / (1 + max(d_i, d_j))` on edges, self weight takes the rest.
pub fn metropolis_weights(topology: &ClusterTopology) -> Vec<Vec<f64>> {
    let s = topology.n_servers;
    let deg: Vec<usize> = (0..s).map(|i| topology.degree(i)).collect();
    let mut w = vec![vec![0.0; s]; s];
    for &(a, b) in &topology.edges {
        let v = 1.0 / (1 + deg[a].max(deg[b])) as f64;
        w[a][b] = v;
        w[b][a] = v;
    }
    for (i, row) in w.iter_mut().enumerate() {
        let off: f64 = row.iter().sum();
        row[i] = 1.0 - off;
    }
    w
}

/// Coordinate mean summed in list order.
pub fn ordered_mean(models: &[ParamVector]) -> ParamVector {
    let dim = models.first().map_or(0, |p| p.len());
    let mut out = vec![0.0; dim];
    for p in models {
        out.iter_mut().zip(p.iter()).for_each(|(o, v)| *o += v);
    }
    let n = models.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    ParamVector(out)
}
