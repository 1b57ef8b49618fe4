//! Content-addressed cache of rendered artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

pub const CACHE_ENV: &str = "PHASELOCK_CACHE_DIR";

/// Hash of the crate version, the operation and its canonicalized inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn new(op: &str, inputs: &BTreeMap<String, String>) -> Self {
        let mut h = Sha256::new();
        h.update(format!("phaselock {}\nop={op}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in inputs {
            h.update(format!("{k}={v}\n"));
        }
        CacheKey(hex::encode(h.finalize()))
    }
}

/// Explicit directory, else the environment override, else none.
pub fn resolve_dir(explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: PathBuf) -> Self {
        Cache { root }
    }

    fn entry(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.0)
    }

    /// Artifact names and contents of a complete entry.
    pub fn get(&self, key: &CacheKey) -> Option<BTreeMap<String, Vec<u8>>> {
        let dir = self.entry(key);
        if !dir.join(".complete").exists() {
            return None;
        }
        let mut out = BTreeMap::new();
        for e in fs::read_dir(&dir).ok()? {
            let e = e.ok()?;
            let name = e.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') {
                continue;
            }
            out.insert(name, fs::read(e.path()).ok()?);
        }
        Some(out)
    }

    pub fn put(&self, key: &CacheKey, files: &BTreeMap<String, Vec<u8>>) -> Result<(), CliError> {
        let dir = self.entry(key);
        let io = |e: std::io::Error| CliError::Usage(format!("cache {}: {e}", dir.display()));
        fs::create_dir_all(&dir).map_err(io)?;
        for (name, bytes) in files {
            fs::write(dir.join(name), bytes).map_err(io)?;
        }
        fs::write(dir.join(".complete"), b"").map_err(io)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(tol: &str) -> BTreeMap<String, String> {
        [("omega", "2"), ("tol", tol)].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn key_depends_on_every_input() {
        assert_eq!(CacheKey::new("portrait", &inputs("1e-9")), CacheKey::new("portrait", &inputs("1e-9")));
        assert_ne!(CacheKey::new("portrait", &inputs("1e-9")), CacheKey::new("portrait", &inputs("1e-10")));
        assert_ne!(CacheKey::new("portrait", &inputs("1e-9")), CacheKey::new("catalog", &inputs("1e-9")));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path().to_path_buf());
        let k = CacheKey::new("x", &inputs("1"));
        assert!(c.get(&k).is_none());
        let files: BTreeMap<String, Vec<u8>> = [("a.txt".to_string(), b"hello".to_vec())].into_iter().collect();
        c.put(&k, &files).unwrap();
        assert_eq!(c.get(&k).unwrap(), files);
    }
}
