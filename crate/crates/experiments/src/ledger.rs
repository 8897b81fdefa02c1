//! Resumable run ledger: one JSON shard per `(parameter, seed)` cell plus an
//! index of shard digests. Shards are written before the index and both by
//! rename, so an interrupted run leaves a consistent ledger.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const LEDGER_FILE: &str = "ledger.json";
const CELL_DIR: &str = "cells";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger io on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("ledger at {0} is corrupt: {1}")]
    Corrupt(PathBuf, String),
    #[error("ledger belongs to config {found}, current config is {expected}")]
    ConfigMismatch { expected: String, found: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LedgerError + '_ {
    move |source| LedgerError::Io { path: path.to_path_buf(), source }
}

/// One unit of work.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    /// Parameter label such as `R=8`; empty for seed-only sweeps.
    pub param: String,
    pub seed: u64,
}

impl CellKey {
    pub fn new(param: impl Into<String>, seed: u64) -> Self {
        Self { param: param.into(), seed }
    }

    pub fn id(&self) -> String {
        format!("{}#{:010}", self.param, self.seed)
    }

    fn file_name(&self) -> String {
        let safe: String =
            self.param.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
        format!("{safe}__{:010}.json", self.seed)
    }
}

#[derive(Serialize, Deserialize)]
struct Index {
    version: u32,
    config_hash: String,
    /// cell id -> SHA-256 of the shard bytes
    cells: BTreeMap<String, String>,
    /// SHA-256 over the serialized `cells` map.
    checksum: String,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn checksum(cells: &BTreeMap<String, String>) -> String {
    digest(serde_json::to_string(cells).expect("map serializes").as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LedgerError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io(path))
}

pub struct RunLedger {
    dir: PathBuf,
    config_hash: String,
    cells: BTreeMap<String, String>,
}

impl RunLedger {
    /// Opens the ledger in `dir`. With `resume` an existing ledger must match
    /// `config_hash`; without it any previous ledger and shards are discarded.
    pub fn open(dir: &Path, config_hash: &str, resume: bool) -> Result<Self, LedgerError> {
        let index_path = dir.join(LEDGER_FILE);
        let cell_dir = dir.join(CELL_DIR);
        let mut ledger = Self { dir: dir.to_path_buf(), config_hash: config_hash.to_string(), cells: BTreeMap::new() };
        if resume && index_path.exists() {
            let text = std::fs::read_to_string(&index_path).map_err(io(&index_path))?;
            let index: Index =
                serde_json::from_str(&text).map_err(|e| LedgerError::Corrupt(index_path.clone(), e.to_string()))?;
            if index.version != VERSION || checksum(&index.cells) != index.checksum {
                return Err(LedgerError::Corrupt(index_path, "checksum mismatch".into()));
            }
            if index.config_hash != config_hash {
                return Err(LedgerError::ConfigMismatch { expected: config_hash.into(), found: index.config_hash });
            }
            ledger.cells = index.cells;
        } else if cell_dir.exists() {
            std::fs::remove_dir_all(&cell_dir).map_err(io(&cell_dir))?;
        }
        std::fs::create_dir_all(&cell_dir).map_err(io(&cell_dir))?;
        ledger.save()?;
        Ok(ledger)
    }

    fn shard_path(&self, key: &CellKey) -> PathBuf {
        self.dir.join(CELL_DIR).join(key.file_name())
    }

    fn save(&self) -> Result<(), LedgerError> {
        let index = Index {
            version: VERSION,
            config_hash: self.config_hash.clone(),
            checksum: checksum(&self.cells),
            cells: self.cells.clone(),
        };
        let text = serde_json::to_string_pretty(&index).expect("index serializes");
        write_atomic(&self.dir.join(LEDGER_FILE), text.as_bytes())
    }

    pub fn completed(&self) -> usize {
        self.cells.len()
    }

    /// The stored result of a completed cell, verified against its digest.
    pub fn load<T: DeserializeOwned>(&self, key: &CellKey) -> Result<Option<T>, LedgerError> {
        let Some(expected) = self.cells.get(&key.id()) else { return Ok(None) };
        let path = self.shard_path(key);
        let bytes = std::fs::read(&path).map_err(io(&path))?;
        if &digest(&bytes) != expected {
            return Err(LedgerError::Corrupt(path, "shard digest mismatch".into()));
        }
        serde_json::from_slice(&bytes).map(Some).map_err(|e| LedgerError::Corrupt(path, e.to_string()))
    }

    pub fn record<T: Serialize>(&mut self, key: &CellKey, value: &T) -> Result<(), LedgerError> {
        let bytes = serde_json::to_vec(value).expect("cell result serializes");
        write_atomic(&self.shard_path(key), &bytes)?;
        self.cells.insert(key.id(), digest(&bytes));
        self.save()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let key = CellKey::new("R=4", 3);
        {
            let mut l = RunLedger::open(dir.path(), "abc", false).unwrap();
            l.record(&key, &vec![1.5, 2.0]).unwrap();
        }
        let l = RunLedger::open(dir.path(), "abc", true).unwrap();
        assert_eq!(l.load::<Vec<f64>>(&key).unwrap(), Some(vec![1.5, 2.0]));
        assert!(matches!(RunLedger::open(dir.path(), "other", true), Err(LedgerError::ConfigMismatch { .. })));
        let fresh = RunLedger::open(dir.path(), "abc", false).unwrap();
        assert_eq!(fresh.completed(), 0);
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let key = CellKey::new("", 0);
        let mut l = RunLedger::open(dir.path(), "h", false).unwrap();
        l.record(&key, &1u32).unwrap();
        std::fs::write(l.shard_path(&key), b"2").unwrap();
        let l = RunLedger::open(dir.path(), "h", true).unwrap();
        assert!(matches!(l.load::<u32>(&key), Err(LedgerError::Corrupt(..))));
        let index = dir.path().join(LEDGER_FILE);
        let text = std::fs::read_to_string(&index).unwrap().replace("\"checksum\": \"", "\"checksum\": \"0");
        std::fs::write(&index, text).unwrap();
        assert!(matches!(RunLedger::open(dir.path(), "h", true), Err(LedgerError::Corrupt(..))));
    }
}
