//! Artifact writing and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_s: f64,
    /// `ok` or `budget_exhausted`.
    pub status: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Every artifact write of a run goes through here, one file at a time.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.entries.push(ArtifactEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(
        self,
        config: &ExperimentConfig,
        wall_time_s: f64,
        budget_exhausted: bool,
    ) -> Result<Manifest, CliError> {
        let m = Manifest {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s,
            status: if budget_exhausted {
                "budget_exhausted"
            } else {
                "ok"
            }
            .to_string(),
            artifacts: self.entries,
        };
        let text =
            serde_json::to_string_pretty(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(m)
    }
}

/// Reads `dir/manifest.json` and returns the artifacts whose size or
/// checksum no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut bad = Vec::new();
    for a in &m.artifacts {
        let ok = std::fs::read(dir.join(&a.path))
            .map(|b| b.len() as u64 == a.bytes && sha256_hex(&b) == a.sha256)
            .unwrap_or(false);
        if !ok {
            bad.push(a.path.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
