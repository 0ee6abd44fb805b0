//! Run reports: summaries, invariant checks, timings and a hashed manifest of
//! every emitted file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cache::{read_json, write_json};
use crate::error::{KicError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub summaries: BTreeMap<String, serde_json::Value>,
    pub invariants: Vec<InvariantCheck>,
    pub cache_hits: Vec<usize>,
    pub errors: Vec<String>,
    pub wall_times: BTreeMap<String, f64>,
    pub manifest: Vec<ManifestEntry>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            summaries: BTreeMap::new(),
            invariants: Vec::new(),
            cache_hits: Vec::new(),
            errors: Vec::new(),
            wall_times: BTreeMap::new(),
            manifest: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    pub fn summary(&mut self, key: &str, value: impl Serialize) {
        self.summaries.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.invariants.push(InvariantCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn time(&mut self, stage: &str, since: Instant) {
        self.wall_times.insert(stage.to_string(), since.elapsed().as_secs_f64());
    }

    pub fn invariants_hold(&self) -> bool {
        self.invariants.iter().all(|c| c.passed)
    }

    /// Hashes `files` (paths under `out_dir`) into the manifest, sorted by path.
    pub fn record_files(&mut self, out_dir: &Path, files: &[PathBuf]) -> Result<()> {
        for file in files {
            let rel = file.strip_prefix(out_dir).unwrap_or(file);
            let (sha256, bytes) = hash_file(file)?;
            self.manifest.push(ManifestEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256,
                bytes,
            });
        }
        self.manifest.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.dedup_by(|a, b| a.path == b.path);
        Ok(())
    }

    pub fn path_in(out_dir: &Path, command: &str) -> PathBuf {
        out_dir.join(format!("report_{command}.json"))
    }

    /// Writes `report_<command>.json` into `out_dir`.
    pub fn write(&mut self, out_dir: &Path) -> Result<PathBuf> {
        if let Some(start) = self.started {
            self.wall_times.insert("total".into(), start.elapsed().as_secs_f64());
        }
        let path = Self::path_in(out_dir, &self.command);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Manifest entries whose file is missing or whose hash changed.
    pub fn verify_manifest(&self, out_dir: &Path) -> Vec<String> {
        self.manifest
            .iter()
            .filter_map(|entry| match hash_file(&out_dir.join(&entry.path)) {
                Ok((hash, _)) if hash == entry.sha256 => None,
                Ok(_) => Some(format!("{}: hash mismatch", entry.path)),
                Err(e) => Some(format!("{}: {e}", entry.path)),
            })
            .collect()
    }
}

pub fn hash_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| KicError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, bytes.len() as u64))
}
