//! On-disk layout: `<dir>/<tier>.<owner>.chain` holds one block record per
//! line, line index = height; `<dir>/store/<hex>` holds payload bytes.

use std::fs;
use std::path::{Path, PathBuf};

use super::block::Block;
use super::chain::{Chain, Tier, Verification};
use super::store::ParamStore;
use crate::error::{Error, Result};

pub const CHAIN_EXT: &str = "chain";
pub const STORE_DIR: &str = "store";

pub fn chain_path(dir: &Path, chain: &Chain) -> PathBuf {
    dir.join(format!("{}.{CHAIN_EXT}", chain.name()))
}

pub fn save_chain(dir: &Path, chain: &Chain) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for b in chain.blocks() {
        text.push_str(&b.to_record());
        text.push('\n');
    }
    let path = chain_path(dir, chain);
    fs::write(&path, text)?;
    Ok(path)
}

/// Splits `<tier>.<owner>.chain` into its parts.
pub fn parse_chain_file_name(name: &str) -> Option<(Tier, String)> {
    let stem = name.strip_suffix(&format!(".{CHAIN_EXT}"))?;
    let (tier, owner) = stem.split_once('.')?;
    Some((Tier::parse(tier)?, owner.to_string()))
}

/// Blocks parsed so far and the height of the first unreadable record.
#[derive(Debug)]
pub struct ParsedChain {
    pub chain: Chain,
    pub unreadable: Option<(u64, String)>,
}

/// Parses chain text line by line, stopping at the first malformed record.
pub fn parse_chain_bytes(tier: Tier, owner: String, bytes: &[u8]) -> ParsedChain {
    let mut blocks = Vec::new();
    let mut unreadable = None;
    if !bytes.is_empty() {
        let body = match bytes.strip_suffix(b"\n") {
            Some(body) => body,
            None => bytes,
        };
        for (i, line) in body.split(|&b| b == b'\n').enumerate() {
            let parsed = std::str::from_utf8(line)
                .map_err(|e| Error::Serialization(e.to_string()))
                .and_then(Block::from_record);
            match parsed {
                Ok(b) => blocks.push(b),
                Err(e) => {
                    unreadable = Some((i as u64, e.to_string()));
                    break;
                }
            }
        }
        if unreadable.is_none() && !bytes.ends_with(b"\n") {
            let last = blocks.len().saturating_sub(1) as u64;
            blocks.pop();
            unreadable = Some((last, "missing final newline".into()));
        }
    }
    ParsedChain {
        chain: Chain::from_blocks(tier, owner, blocks),
        unreadable,
    }
}

pub fn load_chain(path: &Path) -> Result<ParsedChain> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (tier, owner) = parse_chain_file_name(&name)
        .ok_or_else(|| Error::Serialization(format!("not a chain file name: {name}")))?;
    let bytes = fs::read(path)?;
    Ok(parse_chain_bytes(tier, owner, &bytes))
}

/// Chain files in `dir`, sorted by name.
pub fn chain_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::NotFound(format!("ledger directory {}", dir.display())));
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
        if path.is_file() && name.as_deref().and_then(parse_chain_file_name).is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Verification outcome for one chain file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileReport {
    pub chain: String,
    pub path: PathBuf,
    pub blocks: usize,
    pub result: Verification,
}

/// Verifies every chain file and payload under `dir` using only the files.
pub fn verify_dir(dir: &Path) -> Result<Vec<FileReport>> {
    let files = chain_files(dir)?;
    if files.is_empty() {
        return Err(Error::NotFound(format!("no chain files in {}", dir.display())));
    }
    let store_dir = dir.join(STORE_DIR);
    let store = if store_dir.is_dir() {
        ParamStore::load(&store_dir)?
    } else {
        ParamStore::new()
    };
    let mut reports = Vec::new();
    for path in files {
        let parsed = load_chain(&path)?;
        let mut result = parsed.chain.verify(&store);
        if let Some((height, reason)) = parsed.unreadable {
            result = result.earliest(Verification::Bad { height, reason });
        }
        reports.push(FileReport {
            chain: parsed.chain.name(),
            path,
            blocks: parsed.chain.len(),
            result,
        });
    }
    Ok(reports)
}
