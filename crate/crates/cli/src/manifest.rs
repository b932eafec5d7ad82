//! Run manifest: config digest, artifact digests, wall time and versions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub raplab_core: String,
    pub raplab_cli: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub config_path: String,
    pub config_sha256: String,
    pub artifacts: Vec<Artifact>,
    pub wall_time_s: f64,
    pub versions: Versions,
    pub passed: bool,
    pub failed_assertions: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digests every artifact, sorted by path.
pub fn digest_artifacts(dir: &Path, paths: &[PathBuf]) -> std::io::Result<Vec<Artifact>> {
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let bytes = std::fs::read(dir.join(p))?;
        out.push(Artifact {
            path: p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup_by(|a, b| a.path == b.path);
    Ok(out)
}

pub fn versions() -> Versions {
    Versions {
        raplab_core: raplab::VERSION.to_string(),
        raplab_cli: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Every listed artifact exists and still matches its digest.
pub fn verify(dir: &Path, m: &RunManifest) -> Result<(), String> {
    for a in &m.artifacts {
        let bytes = std::fs::read(dir.join(&a.path)).map_err(|e| format!("{}: {e}", a.path))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(format!("{}: digest mismatch", a.path));
        }
    }
    Ok(())
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
