use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::ClientError;
use crate::kg::Edge;

/// A cached neighborhood, stored as `<fingerprint>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub fingerprint: String,
    /// Canonical form of the query, for humans.
    pub query: String,
    pub edges: Vec<Edge>,
    pub non_english: u64,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
    pub etag: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.json"))
    }

    pub fn load(&self, fingerprint: &str) -> Result<Option<CacheEntry>, ClientError> {
        let path = self.path_for(fingerprint);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| ClientError::CorruptCache {
            path: path.display().to_string(),
            reason,
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if entry.fingerprint != fingerprint {
            return Err(corrupt("fingerprint does not match file name".into()));
        }
        Ok(Some(entry))
    }

    /// Writes atomically: temp file in the same directory, then rename.
    pub fn store(&self, entry: &CacheEntry) -> Result<(), ClientError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&entry.fingerprint);
        static SEQ: AtomicU64 = AtomicU64::new(0);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            entry.fingerprint,
            std::process::id(),
            SEQ.fetch_add(1, Ordering::Relaxed)
        ));
        let text = serde_json::to_string_pretty(entry).map_err(std::io::Error::other)?;
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}
