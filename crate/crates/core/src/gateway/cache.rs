use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use super::{cache_key, Backend, ChatRequest, ChatResponse, GatewayError};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// One `<digest>.json` file per response.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get(&self, digest: &str) -> Option<ChatResponse> {
        let path = self.entry_path(digest);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("unreadable cache entry {}: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_slice(&bytes) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes to a unique temp file in the cache directory, then renames it
    /// over the final name.
    pub fn put(&self, digest: &str, response: &ChatResponse) -> Result<(), GatewayError> {
        let tmp = self.dir.join(format!(
            ".{digest}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec(response).expect("response serializes"))?;
            f.sync_all()?;
            fs::rename(&tmp, self.entry_path(digest))
        };
        write().inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })?;
        Ok(())
    }

    /// Removes every cache entry; returns how many were deleted.
    pub fn clear(&self) -> Result<usize, GatewayError> {
        let mut removed = 0;
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(".json") || name.ends_with(".tmp") {
                fs::remove_file(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

pub fn cached_complete(
    backend: &dyn Backend,
    cache: &ResponseCache,
    request: &ChatRequest,
) -> Result<(ChatResponse, CacheOutcome), GatewayError> {
    let digest = cache_key(request);
    if let Some(hit) = cache.get(&digest) {
        return Ok((hit, CacheOutcome::Hit));
    }
    let response = backend.complete(request)?;
    cache.put(&digest, &response)?;
    Ok((response, CacheOutcome::Miss))
}
