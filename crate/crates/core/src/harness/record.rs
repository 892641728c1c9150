//! Persisted run records: output files plus a manifest with content digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::Result;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub digest: String,
}

/// `files` hold only deterministic outputs: two runs with the same config
/// and seed produce identical entries. Outputs carrying wall-clock timings
/// are listed separately in `timing_files`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub files: Vec<FileEntry>,
    pub timing_files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the outputs of one run under a directory.
#[derive(Debug)]
pub struct RunRecord {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunRecord {
    pub fn create(dir: &Path, experiment: &str, config: &RunConfig, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                experiment: experiment.to_string(),
                config: serde_json::to_value(config)?,
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                files: Vec::new(),
                timing_files: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&self, name: &str, bytes: &[u8]) -> Result<FileEntry> {
        std::fs::write(self.dir.join(name), bytes)?;
        Ok(FileEntry {
            path: name.to_string(),
            digest: sha256_hex(bytes),
        })
    }

    /// Writes a deterministic output.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let entry = self.put(name, bytes)?;
        self.manifest.files.push(entry);
        Ok(())
    }

    /// Writes an output containing wall-clock measurements.
    pub fn write_timing(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let entry = self.put(name, bytes)?;
        self.manifest.timing_files.push(entry);
        Ok(())
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_timing_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_timing(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self) -> Result<Manifest> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
    Ok(serde_json::from_str(&text)?)
}
