//! On-disk cache of almost-commuting results, one file per `(n, m)`.
//!
//! Entries live in `<root>/v<FORMAT_VERSION>/(n_m).out` and carry a
//! SHA-256 checksum of their payload. Writes go to a temporary file that
//! is renamed into place, so readers see either nothing or a whole entry.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use gd_core::AlmostCommutingResult;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable overriding the cache root.
pub const CACHE_ENV: &str = "GDH_CACHE_DIR";

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    format_version: u32,
    n: usize,
    m: usize,
    checksum: String,
    payload: String,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

pub fn checksum(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

/// `$GDH_CACHE_DIR`, else `$XDG_DATA_HOME/gdh`, else `~/.local/share/gdh`.
pub fn default_root() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_DATA_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(dir).join("gdh");
    }
    let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    home.join(".local").join("share").join("gdh")
}

impl Cache {
    pub fn new(root: impl AsRef<Path>) -> Self {
        Cache {
            dir: root.as_ref().join(format!("v{FORMAT_VERSION}")),
        }
    }

    pub fn open_default() -> Self {
        Self::new(default_root())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, n: usize, m: usize) -> PathBuf {
        self.dir.join(format!("({n}_{m}).out"))
    }

    /// The cached result, or `None` if missing, stale or corrupt.
    pub fn load(&self, n: usize, m: usize) -> Option<AlmostCommutingResult> {
        let text = fs::read_to_string(self.path_for(n, m)).ok()?;
        decode(&text, n, m)
    }

    pub fn store(&self, result: &AlmostCommutingResult) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let text = encode(result);
        let path = self.path_for(result.n, result.m);
        let tmp = self.dir.join(temp_name(result.n, result.m));
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        if let Err(e) = fs::rename(&tmp, &path) {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&path, e));
        }
        Ok(path)
    }

    /// Cached `(n, m)` pairs with their file sizes, sorted.
    pub fn list(&self) -> Result<Vec<(usize, usize, u64)>> {
        let mut out = Vec::new();
        let entries = match fs::read_dir(&self.dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(CliError::io(&self.dir, e)),
        };
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(&self.dir, e))?;
            let name = entry.file_name();
            let Some((n, m)) = parse_name(&name.to_string_lossy()) else {
                continue;
            };
            let size = entry.metadata().map(|md| md.len()).unwrap_or(0);
            out.push((n, m, size));
        }
        out.sort();
        Ok(out)
    }

    /// Removes every entry and leftover temporary file; returns how many
    /// entries were removed.
    pub fn clear(&self) -> Result<usize> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(CliError::io(&self.dir, e)),
        };
        let mut removed = 0;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(&self.dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let is_entry = parse_name(&name).is_some();
            if is_entry || name.starts_with(".tmp-") {
                fs::remove_file(entry.path()).map_err(|e| CliError::io(entry.path(), e))?;
                removed += usize::from(is_entry);
            }
        }
        Ok(removed)
    }
}

fn temp_name(n: usize, m: usize) -> String {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    let seq = COUNTER.fetch_add(1, Ordering::Relaxed);
    format!(".tmp-({n}_{m})-{}-{nanos}-{seq}", std::process::id())
}

fn parse_name(name: &str) -> Option<(usize, usize)> {
    let inner = name.strip_prefix('(')?.strip_suffix(").out")?;
    let (n, m) = inner.split_once('_')?;
    Some((n.parse().ok()?, m.parse().ok()?))
}

pub(crate) fn encode(result: &AlmostCommutingResult) -> String {
    let payload = serde_json::to_string(result).expect("results serialize");
    let entry = Entry {
        format_version: FORMAT_VERSION,
        n: result.n,
        m: result.m,
        checksum: checksum(&payload),
        payload,
    };
    serde_json::to_string(&entry).expect("entries serialize")
}

pub(crate) fn decode(text: &str, n: usize, m: usize) -> Option<AlmostCommutingResult> {
    let entry: Entry = serde_json::from_str(text).ok()?;
    if entry.format_version != FORMAT_VERSION || entry.n != n || entry.m != m {
        return None;
    }
    if checksum(&entry.payload) != entry.checksum {
        return None;
    }
    let result: AlmostCommutingResult = serde_json::from_str(&entry.payload).ok()?;
    (result.n == n && result.m == m && result.h.len() + 1 == n).then_some(result)
}
