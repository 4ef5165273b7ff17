//! Run records: what a subcommand read and wrote, by content digest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Hex SHA-256 over `blob <len>\0` followed by the bytes, the way git
/// addresses blob contents.
pub fn blob_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory when inside it.
    pub path: String,
    pub bytes: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub seed: u64,
    /// Digest of the effective configuration written next to the record.
    pub config_digest: String,
    pub config_file: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Every file under `path` (or `path` itself), sorted.
fn files_under(path: &Path) -> Vec<PathBuf> {
    if path.is_file() {
        return vec![path.to_path_buf()];
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else {
            continue;
        };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

pub fn digest_paths(root: &Path, paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        for f in files_under(p) {
            let bytes = fs::read(&f)?;
            let rel = f.strip_prefix(root).unwrap_or(&f);
            out.push(FileDigest {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                digest: blob_digest(&bytes),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_blob_hashing_scheme() {
        // printf 'blob 0\0' | sha256sum
        assert_eq!(
            blob_digest(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
