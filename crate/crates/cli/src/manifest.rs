//! Run manifests: one `manifest.json` per output directory recording the
//! configuration, content hashes of inputs and outputs, tool version and
//! creation time.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_unix_secs: u64,
    pub config: serde_json::Value,
    /// Name to SHA-256 of each input (files, or corpus content hashes).
    pub inputs: BTreeMap<String, String>,
    /// File name to SHA-256 of each output file in the directory.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            created_unix_secs: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            config: serde_json::to_value(config).context("serializing configuration")?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn input(&mut self, name: &str, hash: impl Into<String>) -> &mut Self {
        self.inputs.insert(name.to_owned(), hash.into());
        self
    }

    pub fn input_file(&mut self, name: &str, path: &Path) -> Result<&mut Self> {
        let h = hash_file(path)?;
        Ok(self.input(name, h))
    }

    /// Hashes every listed output file inside `dir` and writes the
    /// manifest next to them.
    pub fn write(mut self, dir: &Path, outputs: &[String]) -> Result<()> {
        for name in outputs {
            self.outputs.insert(name.clone(), hash_file(&dir.join(name))?);
        }
        let text = serde_json::to_string_pretty(&self)? + "\n";
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hash_bytes(&bytes))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
