use std::collections::HashSet;
use std::fmt;

use super::block::{valid_producer, Block, BlockKind, BlockMetrics};
use super::digest::Digest;
use super::store::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    Global,
    Shard,
    Lmuc,
}

impl Tier {
    pub fn permits(self, kind: BlockKind) -> bool {
        matches!(
            (self, kind),
            (Tier::Global, BlockKind::TaskPublish)
                | (Tier::Shard, BlockKind::Global | BlockKind::Intermediate)
                | (Tier::Lmuc, BlockKind::LocalUpdate | BlockKind::Intermediate)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Global => "global",
            Tier::Shard => "shard",
            Tier::Lmuc => "lmuc",
        }
    }

    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "global" => Some(Tier::Global),
            "shard" => Some(Tier::Shard),
            "lmuc" => Some(Tier::Lmuc),
            _ => None,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Header fields a caller supplies when appending.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDraft {
    pub kind: BlockKind,
    pub producer: String,
    pub round: u64,
    pub timestamp: u64,
    pub branch: u64,
    pub metrics: BlockMetrics,
}

/// Result of checking a chain against a store.
#[derive(Debug, Clone, PartialEq)]
pub enum Verification {
    Ok,
    Bad { height: u64, reason: String },
}

impl Verification {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verification::Ok)
    }

    pub fn bad_height(&self) -> Option<u64> {
        match self {
            Verification::Ok => None,
            Verification::Bad { height, .. } => Some(*height),
        }
    }

    /// Keeps whichever failure sits lower in the chain.
    pub fn earliest(self, other: Verification) -> Verification {
        match (&self, &other) {
            (Verification::Ok, _) => other,
            (_, Verification::Ok) => self,
            (Verification::Bad { height: a, .. }, Verification::Bad { height: b, .. }) => {
                if b < a {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Append-only hash-linked sequence of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub tier: Tier,
    pub owner: String,
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new(tier: Tier, owner: impl Into<String>) -> Self {
        Chain {
            tier,
            owner: owner.into(),
            blocks: Vec::new(),
        }
    }

    pub(crate) fn from_blocks(tier: Tier, owner: String, blocks: Vec<Block>) -> Self {
        Chain { tier, owner, blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn head(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `{tier}.{owner}`, also the persisted file stem.
    pub fn name(&self) -> String {
        format!("{}.{}", self.tier, self.owner)
    }

    /// Stores `params` and appends a block referencing them.
    pub fn append(&mut self, store: &mut ParamStore, draft: BlockDraft, params: &[f64]) -> Result<&Block> {
        self.check_draft(&draft)?;
        let digest = store.put_params(params)?;
        self.push(draft, digest)
    }

    /// Appends a block referencing a payload already in the store.
    pub fn append_reference(&mut self, store: &ParamStore, draft: BlockDraft, digest: Digest) -> Result<&Block> {
        self.check_draft(&draft)?;
        if !store.check(&digest) {
            return Err(Error::protocol(format!("payload {digest} missing or corrupt")));
        }
        self.push(draft, digest)
    }

    fn check_draft(&self, draft: &BlockDraft) -> Result<()> {
        if !self.tier.permits(draft.kind) {
            return Err(Error::protocol(format!(
                "{} block not allowed on a {} chain",
                draft.kind, self.tier
            )));
        }
        if !valid_producer(&draft.producer) {
            return Err(Error::protocol(format!("invalid producer id {:?}", draft.producer)));
        }
        if !(draft.metrics.loss.is_finite() && draft.metrics.accuracy.is_finite()) {
            return Err(Error::protocol("non-finite block metrics"));
        }
        if draft.kind == BlockKind::Global
            && self
                .blocks
                .iter()
                .any(|b| b.kind == BlockKind::Global && b.round == draft.round && b.branch == draft.branch)
        {
            return Err(Error::protocol(format!(
                "GLOBAL block for round {} (branch {}) already committed",
                draft.round, draft.branch
            )));
        }
        Ok(())
    }

    fn push(&mut self, draft: BlockDraft, digest: Digest) -> Result<&Block> {
        let mut block = Block {
            height: self.blocks.len() as u64,
            prev_hash: self.head().map_or(Digest::ZERO, |b| b.block_hash),
            timestamp: draft.timestamp,
            round: draft.round,
            branch: draft.branch,
            kind: draft.kind,
            producer: draft.producer,
            param_digest: digest,
            metrics: draft.metrics,
            payload_ref: digest,
            block_hash: Digest::ZERO,
        };
        block.block_hash = block.compute_hash();
        self.blocks.push(block);
        Ok(self.blocks.last().unwrap())
    }

    /// Recomputes heights, linkage, hashes and payload digests; reports the
    /// lowest height at which anything fails.
    pub fn verify(&self, store: &ParamStore) -> Verification {
        let mut prev = Digest::ZERO;
        let mut globals = HashSet::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let bad = |reason: String| Verification::Bad {
                height: i as u64,
                reason,
            };
            if b.height != i as u64 {
                return bad(format!("height field {} at position {i}", b.height));
            }
            if b.prev_hash != prev {
                return bad("prev_hash does not link to predecessor".into());
            }
            if b.compute_hash() != b.block_hash {
                return bad("block_hash does not match header".into());
            }
            if !self.tier.permits(b.kind) {
                return bad(format!("{} block on a {} chain", b.kind, self.tier));
            }
            if b.payload_ref != b.param_digest {
                return bad("payload_ref and param_digest disagree".into());
            }
            if !store.check(&b.payload_ref) {
                return bad(format!("payload {} missing or corrupt", b.payload_ref));
            }
            if b.kind == BlockKind::Global && !globals.insert((b.branch, b.round)) {
                return bad(format!("second GLOBAL block for round {}", b.round));
            }
            prev = b.block_hash;
        }
        Verification::Ok
    }

    /// Latest GLOBAL block for `round`, searching from the head.
    pub fn global_for_round(&self, round: u64) -> Option<&Block> {
        self.blocks
            .iter()
            .rev()
            .find(|b| b.kind == BlockKind::Global && b.round == round)
    }

    pub fn max_timestamp(&self) -> Option<u64> {
        self.blocks.iter().map(|b| b.timestamp).max()
    }

    pub fn max_branch(&self) -> Option<u64> {
        self.blocks.iter().map(|b| b.branch).max()
    }
}
