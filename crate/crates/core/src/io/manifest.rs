//! Checksummed list of a run's outputs, written last.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IoError, FORMAT_VERSION};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Path relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    /// SHA-256 of the config text the run was started from.
    pub spec_checksum: String,
    pub code_version: String,
    pub base_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::file(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(spec_text: &str, base_seed: u64) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            format_version: FORMAT_VERSION,
            spec_checksum: sha256_hex(spec_text.as_bytes()),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed,
            timestamp,
            outputs: Vec::new(),
        }
    }

    /// Records a file that already exists under `dir`.
    pub fn add(&mut self, dir: &Path, file: &Path) -> Result<(), IoError> {
        let rel = file.strip_prefix(dir).unwrap_or(file).to_path_buf();
        let sha256 = sha256_file(&dir.join(&rel))?;
        self.outputs.push(OutputEntry { path: rel, sha256 });
        Ok(())
    }

    /// Writes `manifest.json` into `dir`; call after every output is closed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, IoError> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).map_err(|e| IoError::file(&path, e))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recomputes every listed checksum.
    pub fn verify(&self, dir: &Path) -> Result<(), IoError> {
        for out in &self.outputs {
            let path = dir.join(&out.path);
            if sha256_file(&path)? != out.sha256 {
                return Err(IoError::Checksum(path));
            }
        }
        Ok(())
    }
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

    #[test]
    fn write_read_verify() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.csv");
        std::fs::write(&f, "x\n1\n").unwrap();
        let mut m = RunManifest::new("seed = 1", 1);
        m.add(dir.path(), &f).unwrap();
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.outputs[0].path, PathBuf::from("a.csv"));
        back.verify(dir.path()).unwrap();
        std::fs::write(&f, "x\n2\n").unwrap();
        assert!(matches!(back.verify(dir.path()), Err(IoError::Checksum(_))));
    }
}
