//! Run manifest: content hashes for every artifact plus per-stage cache
//! keys, kept as `manifest.json` in the run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub config_hash: String,
    pub stages: BTreeMap<String, StageEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntry {
    /// Hash of the stage-relevant config plus upstream keys.
    pub key: String,
    /// "complete" or "failed".
    pub status: String,
    /// Relative artifact path -> content hash.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("corrupt {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), json)?;
        Ok(())
    }

    /// True when the stage ran with the same key and every artifact is
    /// still present with a matching hash.
    pub fn stage_is_fresh(&self, dir: &Path, stage: &str, key: &str) -> bool {
        let Some(entry) = self.stages.get(stage) else {
            return false;
        };
        if entry.key != key || entry.status != "complete" {
            return false;
        }
        entry.artifacts.iter().all(|(rel, hash)| {
            sha256_file(&dir.join(rel)).map(|h| h == *hash).unwrap_or(false)
        })
    }

    pub fn record_complete(&mut self, dir: &Path, stage: &str, key: &str, files: &[PathBuf]) -> Result<()> {
        let mut artifacts = BTreeMap::new();
        for file in files {
            let rel = file
                .strip_prefix(dir)
                .unwrap_or(file)
                .to_string_lossy()
                .replace('\\', "/");
            artifacts.insert(rel, sha256_file(file)?);
        }
        self.stages.insert(
            stage.to_string(),
            StageEntry {
                key: key.to_string(),
                status: "complete".into(),
                artifacts,
            },
        );
        self.save(dir)
    }

    /// Mark a stage as failed so partial artifacts are never trusted.
    pub fn record_failed(&mut self, dir: &Path, stage: &str, key: &str) {
        self.stages.insert(
            stage.to_string(),
            StageEntry {
                key: key.to_string(),
                status: "failed".into(),
                artifacts: BTreeMap::new(),
            },
        );
        let _ = self.save(dir);
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot hash {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_str(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_requires_matching_key_and_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("a.txt");
        std::fs::write(&file, "hello").unwrap();
        let mut manifest = Manifest::default();
        manifest
            .record_complete(dir.path(), "ingest", "key1", &[file.clone()])
            .unwrap();
        assert!(manifest.stage_is_fresh(dir.path(), "ingest", "key1"));
        assert!(!manifest.stage_is_fresh(dir.path(), "ingest", "key2"));
        std::fs::write(&file, "tampered").unwrap();
        assert!(!manifest.stage_is_fresh(dir.path(), "ingest", "key1"));
    }

    #[test]
    fn failed_stage_is_never_fresh() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = Manifest::default();
        manifest.record_failed(dir.path(), "train", "key1");
        assert!(!manifest.stage_is_fresh(dir.path(), "train", "key1"));
        let reloaded = Manifest::load(dir.path()).unwrap();
        assert_eq!(reloaded.stages["train"].status, "failed");
    }
}
