use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Inter-server communication pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Star,
    Ring,
    Random,
}

impl Topology {
    pub const ALL: [Topology; 3] = [Topology::Star, Topology::Ring, Topology::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Star => "STAR",
            Topology::Ring => "RING",
            Topology::Random => "RANDOM",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "STAR" => Ok(Topology::Star),
            "RING" => Ok(Topology::Ring),
            "RANDOM" => Ok(Topology::Random),
            _ => Err(Error::config(format!("unknown topology {s:?}"))),
        }
    }
}

/// Resampling cap for connected random graphs.
const MAX_GRAPH_ATTEMPTS: u64 = 10_000;

/// The server graph used in one round. Edges are stored as `(low, high)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTopology {
    pub round: u64,
    pub kind: Topology,
    pub n_servers: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub star_hub: Option<usize>,
}

impl ClusterTopology {
    /// Builds round `round`'s graph. The star hub rotates round-robin with
    /// round 1 hubbed at server 0; random graphs are `G(S, p)` resampled
    /// until connected.
    pub fn for_round(kind: Topology, n_servers: usize, round: u64, edge_prob: f64, seed: u64) -> Result<Self> {
        if n_servers == 0 {
            return Err(Error::config("at least one server is required"));
        }
        let mut edges = BTreeSet::new();
        let mut star_hub = None;
        match kind {
            Topology::Star => {
                let hub = (round.saturating_sub(1) % n_servers as u64) as usize;
                star_hub = Some(hub);
                for s in (0..n_servers).filter(|&s| s != hub) {
                    edges.insert(edge(hub, s));
                }
            }
            Topology::Ring => {
                if n_servers > 1 {
                    for s in 0..n_servers {
                        edges.insert(edge(s, (s + 1) % n_servers));
                    }
                }
            }
            Topology::Random => {
                if !(edge_prob > 0.0 && edge_prob <= 1.0) {
                    return Err(Error::config(format!("random edge probability {edge_prob} outside (0, 1]")));
                }
                let mut attempt = 0;
                loop {
                    if attempt == MAX_GRAPH_ATTEMPTS {
                        return Err(Error::Internal(format!(
                            "no connected random graph after {MAX_GRAPH_ATTEMPTS} draws"
                        )));
                    }
                    let mut rng = seed::rng(seed, purpose::TOPOLOGY, &[round, attempt]);
                    edges.clear();
                    for i in 0..n_servers {
                        for j in i + 1..n_servers {
                            if rng.random::<f64>() < edge_prob {
                                edges.insert((i, j));
                            }
                        }
                    }
                    if is_connected(n_servers, &edges) {
                        break;
                    }
                    attempt += 1;
                }
            }
        }
        Ok(ClusterTopology {
            round,
            kind,
            n_servers,
            edges,
            star_hub,
        })
    }

    pub fn degree(&self, server: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == server || b == server).count()
    }

    pub fn neighbors(&self, server: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == server, b == server) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.n_servers, &self.edges)
    }
}

fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub(crate) fn is_connected(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let w = match (a == v, b == v) {
                (true, _) => b,
                (_, true) => a,
                _ => continue,
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_hub_rotates() {
        let hubs: Vec<_> = (1..=4)
            .map(|r| ClusterTopology::for_round(Topology::Star, 3, r, 0.5, 0).unwrap().star_hub.unwrap())
            .collect();
        assert_eq!(hubs, vec![0, 1, 2, 0]);
        let t = ClusterTopology::for_round(Topology::Star, 5, 2, 0.5, 0).unwrap();
        assert_eq!(t.degree(1), 4);
        assert_eq!(t.edges.len(), 4);
    }

    #[test]
    fn ring_is_one_cycle() {
        let t = ClusterTopology::for_round(Topology::Ring, 5, 1, 0.5, 0).unwrap();
        assert_eq!(t.edges.len(), 5);
        assert!((0..5).all(|s| t.degree(s) == 2));
        assert!(t.is_connected());
    }

    #[test]
    fn random_graphs_are_connected_and_seeded() {
        for round in 1..50 {
            let a = ClusterTopology::for_round(Topology::Random, 6, round, 0.3, 9).unwrap();
            let b = ClusterTopology::for_round(Topology::Random, 6, round, 0.3, 9).unwrap();
            assert!(a.is_connected());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("ring".parse::<Topology>().unwrap(), Topology::Ring);
        assert!("mesh".parse::<Topology>().is_err());
    }
}
