//! Input loading with content hashes, and the provenance block every report
//! carries so a run can be repeated from its output alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lotusfilter::{CutoffTable, VectorDataset};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Default, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: &'static str,
    /// sha256 of every input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn load_vectors(&mut self, path: &Path) -> Result<VectorDataset> {
        let bytes = self.read(path)?;
        VectorDataset::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
    }

    pub fn load_table(&mut self, path: &Path) -> Result<CutoffTable> {
        let bytes = self.read(path)?;
        CutoffTable::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `<path>` with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}
