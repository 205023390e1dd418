//! Run manifests: what was run, with which inputs, and what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub workers: usize,
    /// Input files with their SHA-256 digests.
    pub inputs: BTreeMap<String, String>,
    pub output_dir: PathBuf,
    /// Files written to the output directory with their SHA-256 digests.
    pub artifacts: BTreeMap<String, String>,
    pub timestamp: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digests of every regular file below `dir`, keyed by relative path, manifest excluded.
pub fn hash_tree(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(dir)?.to_string_lossy().replace('\\', "/");
            if rel != MANIFEST_FILE {
                out.insert(rel, sha256_file(&path)?);
            }
        }
    }
    Ok(out)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>, workers: usize, output_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            workers,
            inputs: BTreeMap::new(),
            output_dir: output_dir.to_path_buf(),
            artifacts: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn add_input_tree(&mut self, dir: &Path) -> Result<()> {
        for (rel, digest) in hash_tree(dir)? {
            self.inputs.insert(dir.join(rel).display().to_string(), digest);
        }
        Ok(())
    }

    pub fn add_input_file(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Hashes the output directory and writes the manifest into it.
    pub fn finish(mut self) -> Result<()> {
        self.artifacts = hash_tree(&self.output_dir)?;
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(self.output_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}
