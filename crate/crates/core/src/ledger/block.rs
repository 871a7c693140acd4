use std::fmt;
use std::str::FromStr;

use super::digest::Digest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    TaskPublish,
    LocalUpdate,
    Intermediate,
    Global,
}

impl BlockKind {
    fn code(self) -> u8 {
        match self {
            BlockKind::TaskPublish => 0,
            BlockKind::LocalUpdate => 1,
            BlockKind::Intermediate => 2,
            BlockKind::Global => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::TaskPublish => "TASK_PUBLISH",
            BlockKind::LocalUpdate => "LOCAL_UPDATE",
            BlockKind::Intermediate => "INTERMEDIATE",
            BlockKind::Global => "GLOBAL",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TASK_PUBLISH" => Ok(BlockKind::TaskPublish),
            "LOCAL_UPDATE" => Ok(BlockKind::LocalUpdate),
            "INTERMEDIATE" => Ok(BlockKind::Intermediate),
            "GLOBAL" => Ok(BlockKind::Global),
            _ => Err(Error::Serialization(format!("unknown block kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockMetrics {
    pub loss: f64,
    pub accuracy: f64,
}

/// Ledger record. Parameters live in the store; the block holds digests.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Digest,
    /// Logical clock: count of federation rounds executed so far.
    pub timestamp: u64,
    pub round: u64,
    /// Rollback generation; 0 for the original run.
    pub branch: u64,
    pub kind: BlockKind,
    pub producer: String,
    pub param_digest: Digest,
    pub metrics: BlockMetrics,
    pub payload_ref: Digest,
    pub block_hash: Digest,
}

/// Producer ids are restricted so the text encoding needs no escaping.
pub fn valid_producer(p: &str) -> bool {
    !p.is_empty()
        && p.len() <= 128
        && p.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'/' | b'.'))
}

impl Block {
    /// Binary header layout hashed into `block_hash`: little-endian integers,
    /// raw digests, a length-prefixed producer and binary64 metrics.
    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(200);
        out.extend_from_slice(b"dqfl-block-v1");
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.prev_hash.0);
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&self.branch.to_le_bytes());
        out.push(self.kind.code());
        out.extend_from_slice(&(self.producer.len() as u32).to_le_bytes());
        out.extend_from_slice(self.producer.as_bytes());
        out.extend_from_slice(&self.param_digest.0);
        out.extend_from_slice(&self.metrics.loss.to_le_bytes());
        out.extend_from_slice(&self.metrics.accuracy.to_le_bytes());
        out.extend_from_slice(&self.payload_ref.0);
        out
    }

    pub fn compute_hash(&self) -> Digest {
        Digest::of(&self.header_bytes())
    }

    /// One-line `key=value` text record, the persisted form.
    pub fn to_record(&self) -> String {
        format!(
            "height={} prev_hash={} timestamp={} round={} branch={} kind={} producer={} \
             param_digest={} loss={} accuracy={} payload_ref={} block_hash={}",
            self.height,
            self.prev_hash,
            self.timestamp,
            self.round,
            self.branch,
            self.kind,
            self.producer,
            self.param_digest,
            self.metrics.loss,
            self.metrics.accuracy,
            self.payload_ref,
            self.block_hash,
        )
    }

    /// Parses a record and rejects anything that does not re-serialize to
    /// the identical text, so no two distinct lines decode to one block.
    pub fn from_record(line: &str) -> Result<Block> {
        let mut fields = line.split(' ');
        let mut next = |key: &str| -> Result<&str> {
            let field = fields
                .next()
                .ok_or_else(|| Error::Serialization(format!("missing field {key}")))?;
            field
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| Error::Serialization(format!("expected {key}=, found {field:?}")))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Serialization(format!("bad integer {s:?}: {e}")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Serialization(format!("bad real {s:?}: {e}")))
        };
        let block = Block {
            height: int(next("height")?)?,
            prev_hash: Digest::from_hex(next("prev_hash")?)?,
            timestamp: int(next("timestamp")?)?,
            round: int(next("round")?)?,
            branch: int(next("branch")?)?,
            kind: next("kind")?.parse()?,
            producer: next("producer")?.to_string(),
            param_digest: Digest::from_hex(next("param_digest")?)?,
            metrics: BlockMetrics {
                loss: real(next("loss")?)?,
                accuracy: real(next("accuracy")?)?,
            },
            payload_ref: Digest::from_hex(next("payload_ref")?)?,
            block_hash: Digest::from_hex(next("block_hash")?)?,
        };
        if fields.next().is_some() {
            return Err(Error::Serialization("trailing fields".into()));
        }
        if !valid_producer(&block.producer) {
            return Err(Error::Serialization(format!("invalid producer {:?}", block.producer)));
        }
        if block.to_record() != line {
            return Err(Error::Serialization("record is not in canonical form".into()));
        }
        Ok(block)
    }
}
