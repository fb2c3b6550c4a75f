use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::report::ReportRow;

/// Overrides the cache directory.
pub const CACHE_ENV: &str = "MOMENTLAB_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".momentlab-cache";

/// Content-addressed store of finished grid cells.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_CACHE_DIR.into()))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// SHA-256 of the canonical JSON of `key`. `serde_json` maps are sorted, so
    /// equal keys always serialise identically.
    pub fn digest(key: &Value) -> String {
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn lookup(&self, key: &Value) -> Option<Vec<ReportRow>> {
        let path = self.path(&Self::digest(key));
        let text = std::fs::read_to_string(&path).ok()?;
        match serde_json::from_str(&text) {
            Ok(rows) => Some(rows),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes to a temporary file and renames it into place.
    pub fn store(&self, key: &Value, rows: &[ReportRow]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let digest = Self::digest(key);
        let tmp = self.dir.join(format!(".{digest}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec(rows).expect("rows serialise"))?;
        std::fs::rename(&tmp, self.path(&digest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn miss_hit_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = json!({"kind": "sf", "seed": 1});
        assert!(cache.lookup(&key).is_none());
        cache.store(&key, &[]).unwrap();
        assert_eq!(cache.lookup(&key), Some(vec![]));
        assert!(cache.lookup(&json!({"kind": "sf", "seed": 2})).is_none());
        std::fs::write(cache.path(&Cache::digest(&key)), "{not json").unwrap();
        assert!(cache.lookup(&key).is_none());
    }

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert_eq!(Cache::digest(&a), Cache::digest(&b));
    }
}
