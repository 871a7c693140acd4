use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::digest::Digest;
use super::serialize::{canonical_deserialize, canonical_serialize};
use crate::error::{Error, Result};
use crate::qnn::ParamVector;

/// Content-addressed parameter payloads keyed by their SHA-256 digest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    payloads: BTreeMap<Digest, Vec<u8>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_params(&mut self, params: &[f64]) -> Result<Digest> {
        Ok(self.put(canonical_serialize(params)?))
    }

    pub fn put(&mut self, bytes: Vec<u8>) -> Digest {
        let key = Digest::of(&bytes);
        self.payloads.entry(key).or_insert(bytes);
        key
    }

    pub fn get(&self, key: &Digest) -> Option<&[u8]> {
        self.payloads.get(key).map(Vec::as_slice)
    }

    pub fn params(&self, key: &Digest) -> Result<ParamVector> {
        let bytes = self
            .get(key)
            .ok_or_else(|| Error::NotFound(format!("payload {key}")))?;
        if Digest::of(bytes) != *key {
            return Err(Error::Protocol(format!("payload {key} fails its digest")));
        }
        canonical_deserialize(bytes)
    }

    /// Whether the payload exists and hashes to its key.
    pub fn check(&self, key: &Digest) -> bool {
        self.get(key).is_some_and(|b| Digest::of(b) == *key)
    }

    pub fn len(&self) -> usize {
        self.payloads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payloads.is_empty()
    }

    pub(crate) fn insert_raw(&mut self, key: Digest, bytes: Vec<u8>) {
        self.payloads.insert(key, bytes);
    }

    /// One file per payload, named by its lowercase hex digest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (key, bytes) in &self.payloads {
            fs::write(dir.join(key.to_hex()), bytes)?;
        }
        Ok(())
    }

    /// Loads payload files as stored; integrity is checked by verification.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            let key = Digest::from_hex(&name)
                .map_err(|_| Error::Serialization(format!("unexpected file {name} in parameter store")))?;
            store.insert_raw(key, fs::read(entry.path())?);
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_by_content() {
        let mut store = ParamStore::new();
        let k = store.put_params(&[1.0, 2.0]).unwrap();
        assert_eq!(store.put_params(&[1.0, 2.0]).unwrap(), k);
        assert_eq!(store.len(), 1);
        assert_eq!(store.params(&k).unwrap().0, vec![1.0, 2.0]);
        assert!(store.check(&k));
        assert!(matches!(store.params(&Digest::ZERO), Err(Error::NotFound(_))));
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ParamStore::new();
        store.put_params(&[0.5]).unwrap();
        store.put_params(&[0.25, -3.0]).unwrap();
        store.save(dir.path()).unwrap();
        assert_eq!(ParamStore::load(dir.path()).unwrap(), store);
    }
}
