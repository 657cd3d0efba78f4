use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct OutputDigest {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outcome: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run. Each file is written once from a complete
/// buffer.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|f| f.file != name);
        self.files.push(OutputDigest { file: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> detpro_core::Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Registers a file some other component already wrote below the root.
    pub fn adopt(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        let rel = path.strip_prefix(&self.root).unwrap_or(path).to_string_lossy().replace('\\', "/");
        self.files.retain(|f| f.file != rel);
        self.files.push(OutputDigest { file: rel, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn digests(&self) -> &[OutputDigest] {
        &self.files
    }
}

/// Writes the manifest through a temporary file and a rename.
pub fn write_manifest(root: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = root.join(MANIFEST_NAME);
    let tmp = root.join(format!(".{MANIFEST_NAME}.tmp"));
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&tmp, text)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Reads the manifest of a run directory and re-hashes every listed file.
/// Returns the names whose digests do not match.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(root.join(MANIFEST_NAME))?)?;
    let mut bad = Vec::new();
    for out in &manifest.outputs {
        match fs::read(root.join(&out.file)) {
            Ok(bytes) if sha256_hex(&bytes) == out.sha256 && bytes.len() as u64 == out.bytes => {}
            _ => bad.push(out.file.clone()),
        }
    }
    Ok(bad)
}
