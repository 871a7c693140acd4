//! Three-tier append-only ledger: a global chain of task publications, a
//! task shard chain of cluster commits and global models, and one local
//! model update chain (LMUC) per cluster. Blocks carry digests; parameter
//! payloads live in a content-addressed [`ParamStore`].

mod block;
mod chain;
mod digest;
mod persist;
mod quorum;
mod serialize;
mod store;

pub use block::{valid_producer, Block, BlockKind, BlockMetrics};
pub use chain::{BlockDraft, Chain, Tier, Verification};
pub use digest::Digest;
pub use persist::{
    chain_files, chain_path, load_chain, parse_chain_bytes, parse_chain_file_name, save_chain, verify_dir,
    FileReport, ParsedChain, CHAIN_EXT, STORE_DIR,
};
pub use quorum::{quorum_commit, quorum_threshold, QuorumOutcome};
pub use serialize::{canonical_deserialize, canonical_serialize};
pub use store::ParamStore;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::qnn::ParamVector;

pub const GLOBAL_OWNER: &str = "main";
pub const SHARD_OWNER: &str = "task-0";

pub fn server_id(server: usize) -> String {
    format!("server-{server}")
}

pub fn client_id(server: usize, client: usize) -> String {
    format!("server-{server}/client-{client}")
}

/// Stores `params` and appends a block of `kind` to `chain`.
pub fn append_block(
    chain: &mut Chain,
    store: &mut ParamStore,
    draft: BlockDraft,
    params: &[f64],
) -> Result<Block> {
    chain.append(store, draft, params).cloned()
}

pub fn verify_chain(chain: &Chain, store: &ParamStore) -> Verification {
    chain.verify(store)
}

/// Mirrors the verified head of `lmuc` onto `shard` as an INTERMEDIATE commit.
pub fn cross_chain_commit(lmuc: &Chain, shard: &mut Chain, store: &ParamStore, producer: &str) -> Result<Block> {
    if let Verification::Bad { height, reason } = lmuc.verify(store) {
        return Err(Error::Protocol(format!(
            "{} fails verification at height {height}: {reason}",
            lmuc.name()
        )));
    }
    let head = lmuc
        .head()
        .ok_or_else(|| Error::Protocol(format!("{} is empty", lmuc.name())))?;
    let draft = BlockDraft {
        kind: BlockKind::Intermediate,
        producer: producer.to_string(),
        round: head.round,
        timestamp: head.timestamp,
        branch: head.branch,
        metrics: head.metrics,
    };
    shard.append_reference(store, draft, head.param_digest).cloned()
}

/// Parameters of the latest GLOBAL block committed for `round`. Nothing is
/// truncated; the caller restarts from the returned model.
pub fn rollback(shard: &Chain, store: &ParamStore, round: u64) -> Result<ParamVector> {
    let block = shard
        .global_for_round(round)
        .ok_or_else(|| Error::NotFound(format!("no GLOBAL block for round {round}")))?;
    store.params(&block.param_digest)
}

/// Every chain of one federation task plus the shared payload store.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub global: Chain,
    pub shard: Chain,
    pub lmucs: Vec<Chain>,
    pub store: ParamStore,
}

impl Ledger {
    pub fn new(n_servers: usize) -> Self {
        Ledger {
            global: Chain::new(Tier::Global, GLOBAL_OWNER),
            shard: Chain::new(Tier::Shard, SHARD_OWNER),
            lmucs: (0..n_servers).map(|s| Chain::new(Tier::Lmuc, server_id(s))).collect(),
            store: ParamStore::new(),
        }
    }

    pub fn chains(&self) -> impl Iterator<Item = &Chain> {
        [&self.global, &self.shard].into_iter().chain(&self.lmucs)
    }

    /// Per-chain verification against the in-memory store.
    pub fn verify_all(&self) -> Vec<(String, Verification)> {
        self.chains().map(|c| (c.name(), c.verify(&self.store))).collect()
    }

    pub fn is_valid(&self) -> bool {
        self.chains().all(|c| c.verify(&self.store).is_ok())
    }

    /// Writes every chain file and the store; returns the chain file paths.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.store.save(&dir.join(STORE_DIR))?;
        self.chains().map(|c| save_chain(dir, c)).collect()
    }

    /// Loads a saved ledger; fails on any unreadable record.
    pub fn load(dir: &Path) -> Result<Self> {
        let store = ParamStore::load(&dir.join(STORE_DIR))?;
        let mut global = None;
        let mut shard = None;
        let mut lmucs = Vec::new();
        for path in chain_files(dir)? {
            let parsed = load_chain(&path)?;
            if let Some((height, reason)) = parsed.unreadable {
                return Err(Error::Serialization(format!(
                    "{} height {height}: {reason}",
                    path.display()
                )));
            }
            match parsed.chain.tier {
                Tier::Global => global = Some(parsed.chain),
                Tier::Shard => shard = Some(parsed.chain),
                Tier::Lmuc => lmucs.push(parsed.chain),
            }
        }
        let missing = |what: &str| Error::NotFound(format!("{what} chain in {}", dir.display()));
        let global = global.ok_or_else(|| missing("global"))?;
        let shard = shard.ok_or_else(|| missing("shard"))?;
        let mut indexed = Vec::with_capacity(lmucs.len());
        for c in lmucs {
            let idx = c
                .owner
                .strip_prefix("server-")
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Serialization(format!("unexpected LMUC owner {}", c.owner)))?;
            indexed.push((idx, c));
        }
        indexed.sort_by_key(|(i, _)| *i);
        if indexed.iter().enumerate().any(|(pos, (i, _))| pos != *i) {
            return Err(Error::Serialization("LMUC files are not numbered 0..S-1".into()));
        }
        Ok(Ledger {
            global,
            shard,
            lmucs: indexed.into_iter().map(|(_, c)| c).collect(),
            store,
        })
    }

    /// Next logical timestamp and branch to use after a restart.
    pub fn clock(&self) -> u64 {
        self.chains().filter_map(Chain::max_timestamp).max().unwrap_or(0)
    }

    pub fn latest_branch(&self) -> u64 {
        self.chains().filter_map(Chain::max_branch).max().unwrap_or(0)
    }

    /// GLOBAL digests of `branch` by round, in round order.
    pub fn global_digests(&self, branch: u64) -> Vec<(u64, Digest)> {
        let mut out: Vec<_> = self
            .shard
            .blocks()
            .iter()
            .filter(|b| b.kind == BlockKind::Global && b.branch == branch)
            .map(|b| (b.round, b.param_digest))
            .collect();
        out.sort_by_key(|(r, _)| *r);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft(kind: BlockKind, round: u64, producer: &str) -> BlockDraft {
        BlockDraft {
            kind,
            producer: producer.into(),
            round,
            timestamp: round,
            branch: 0,
            metrics: BlockMetrics::default(),
        }
    }

    fn small_ledger() -> Ledger {
        let mut l = Ledger::new(2);
        let Ledger {
            global,
            shard,
            lmucs,
            store,
        } = &mut l;
        global.append(store, draft(BlockKind::TaskPublish, 0, "main"), &[0.0, 0.0]).unwrap();
        shard.append(store, draft(BlockKind::Global, 0, "main"), &[0.0, 0.0]).unwrap();
        for round in 1..=2u64 {
            for (s, lmuc) in lmucs.iter_mut().enumerate() {
                let p = [round as f64, s as f64];
                lmuc.append(store, draft(BlockKind::LocalUpdate, round, &client_id(s, 0)), &p)
                    .unwrap();
                lmuc.append(store, draft(BlockKind::Intermediate, round, &server_id(s)), &p)
                    .unwrap();
                cross_chain_commit(lmuc, shard, store, &server_id(s)).unwrap();
            }
            shard
                .append(store, draft(BlockKind::Global, round, "main"), &[round as f64, 0.5])
                .unwrap();
        }
        l
    }

    #[test]
    fn cross_commit_mirrors_head() {
        let l = small_ledger();
        let head = l.lmucs[1].head().unwrap();
        let mirrored = &l.shard.blocks()[l.shard.len() - 2];
        assert_eq!(mirrored.kind, BlockKind::Intermediate);
        assert_eq!(mirrored.param_digest, head.param_digest);
        assert_eq!(mirrored.payload_ref, head.payload_ref);
        assert_eq!(mirrored.producer, "server-1");
        assert!(l.is_valid());
    }

    #[test]
    fn cross_commit_rejects_tampered_head() {
        let mut l = small_ledger();
        let mut blocks = l.lmucs[0].blocks().to_vec();
        blocks.last_mut().unwrap().metrics.loss = 9.0;
        let forged = Chain::from_blocks(Tier::Lmuc, "server-0".into(), blocks);
        let before = l.shard.clone();
        let err = cross_chain_commit(&forged, &mut l.shard, &l.store, "server-0").unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
        assert_eq!(l.shard, before);
    }

    #[test]
    fn rollback_reads_global() {
        let l = small_ledger();
        assert_eq!(rollback(&l.shard, &l.store, 0).unwrap().0, vec![0.0, 0.0]);
        assert_eq!(rollback(&l.shard, &l.store, 2).unwrap().0, vec![2.0, 0.5]);
        assert!(matches!(rollback(&l.shard, &l.store, 3), Err(Error::NotFound(_))));
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let l = small_ledger();
        l.save(dir.path()).unwrap();
        let back = Ledger::load(dir.path()).unwrap();
        assert_eq!(back, l);
        assert!(verify_dir(dir.path()).unwrap().iter().all(|r| r.result.is_ok()));
    }
}
