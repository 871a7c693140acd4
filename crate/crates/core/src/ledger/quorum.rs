use std::collections::BTreeMap;

use super::digest::Digest;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuorumOutcome {
    Committed,
    Rejected { dissenters: Vec<usize> },
}

impl QuorumOutcome {
    pub fn is_committed(&self) -> bool {
        matches!(self, QuorumOutcome::Committed)
    }
}

/// Smallest number of matching votes that commits among `n_servers`.
pub fn quorum_threshold(n_servers: usize) -> usize {
    2 * n_servers / 3 + 1
}

/// Commits iff at least `floor(2S/3) + 1` servers voted the candidate digest.
/// A missing vote counts as dissent.
pub fn quorum_commit(candidate: &Digest, votes: &BTreeMap<usize, Digest>, n_servers: usize) -> QuorumOutcome {
    let dissenters: Vec<usize> = (0..n_servers)
        .filter(|s| votes.get(s) != Some(candidate))
        .collect();
    if n_servers - dissenters.len() >= quorum_threshold(n_servers) {
        QuorumOutcome::Committed
    } else {
        QuorumOutcome::Rejected { dissenters }
    }
}
