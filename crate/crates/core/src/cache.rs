//! On-disk memoization of exact null tables, keyed by `(n, p)`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_null::ExactNullTable;

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "VTEST_CACHE_DIR";

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CachedTable {
    schema_version: u32,
    n: u64,
    p: u64,
    total_sequences: String,
    /// `[r, k, count]` with the count as a decimal string.
    cells: Vec<(u64, u64, String)>,
}

/// Supplies exact tables to callers that need many of them.
pub trait TableProvider: Sync {
    fn table(&self, n: u64, p: u64) -> Result<Arc<ExactNullTable>>;
}

/// Builds every table on demand, keeping them in memory only.
#[derive(Debug, Default)]
pub struct InMemoryTables {
    built: Mutex<HashMap<(u64, u64), Arc<ExactNullTable>>>,
}

impl TableProvider for InMemoryTables {
    fn table(&self, n: u64, p: u64) -> Result<Arc<ExactNullTable>> {
        if let Some(t) = self.built.lock().expect("poisoned").get(&(n, p)) {
            return Ok(t.clone());
        }
        let t = Arc::new(ExactNullTable::build(n, p)?);
        self.built
            .lock()
            .expect("poisoned")
            .insert((n, p), t.clone());
        Ok(t)
    }
}

/// Tables persisted as JSON under a directory, plus an in-memory layer.
#[derive(Debug)]
pub struct TableCache {
    dir: PathBuf,
    memory: InMemoryTables,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            memory: InMemoryTables::default(),
        }
    }

    /// `$VTEST_CACHE_DIR`, else `$XDG_CACHE_HOME/vtest`, else
    /// `~/.cache/vtest`, else a directory under the system temp dir.
    pub fn from_env() -> Self {
        Self::new(default_cache_dir())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, n: u64, p: u64) -> PathBuf {
        self.dir.join(format!("gutjahr-n{n}-p{p}.json"))
    }

    fn load(&self, n: u64, p: u64) -> Option<ExactNullTable> {
        let text = fs::read_to_string(self.path_for(n, p)).ok()?;
        let cached: CachedTable = serde_json::from_str(&text).ok()?;
        if cached.schema_version != SCHEMA_VERSION || cached.n != n || cached.p != p {
            return None;
        }
        let mut cells = BTreeMap::new();
        for (r, k, c) in cached.cells {
            cells.insert((r, k), c.parse::<BigInt>().ok()?);
        }
        let table = ExactNullTable::from_counts(n, p, cells).ok()?;
        // A truncated or edited file must not be trusted.
        let sum: BigInt = table.counts().values().sum();
        (table.total_sequences().to_string() == cached.total_sequences
            && &sum == table.total_sequences())
        .then_some(table)
    }

    fn store(&self, table: &ExactNullTable) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::Cache(e.to_string()))?;
        let cached = CachedTable {
            schema_version: SCHEMA_VERSION,
            n: table.n(),
            p: table.p(),
            total_sequences: table.total_sequences().to_string(),
            cells: table
                .counts()
                .iter()
                .map(|(&(r, k), c)| (r, k, c.to_string()))
                .collect(),
        };
        let text = serde_json::to_string(&cached).map_err(|e| Error::Cache(e.to_string()))?;
        let path = self.path_for(table.n(), table.p());
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        fs::write(&tmp, text).map_err(|e| Error::Cache(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| Error::Cache(e.to_string()))
    }

    /// Loads the table from disk, or builds and persists it. A failure to
    /// write the cache is not fatal.
    pub fn load_or_build(&self, n: u64, p: u64) -> Result<Arc<ExactNullTable>> {
        if let Some(t) = self.memory.built.lock().expect("poisoned").get(&(n, p)) {
            return Ok(t.clone());
        }
        let table = match self.load(n, p) {
            Some(t) => t,
            None => {
                let t = ExactNullTable::build(n, p)?;
                let _ = self.store(&t);
                t
            }
        };
        let table = Arc::new(table);
        self.memory
            .built
            .lock()
            .expect("poisoned")
            .insert((n, p), table.clone());
        Ok(table)
    }

    /// Whether a valid on-disk entry exists.
    pub fn contains(&self, n: u64, p: u64) -> bool {
        self.load(n, p).is_some()
    }
}

impl TableProvider for TableCache {
    fn table(&self, n: u64, p: u64) -> Result<Arc<ExactNullTable>> {
        self.load_or_build(n, p)
    }
}

pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(dir).join("vtest");
    }
    if let Some(home) = std::env::var_os("HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(home).join(".cache").join("vtest");
    }
    std::env::temp_dir().join("vtest-cache")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path());
        assert!(!cache.contains(3, 2));
        let built = cache.load_or_build(3, 2).unwrap();
        assert!(cache.contains(3, 2));
        let fresh = TableCache::new(dir.path());
        let loaded = fresh.load_or_build(3, 2).unwrap();
        assert_eq!(*built, *loaded);
        assert_eq!(*loaded, ExactNullTable::build(3, 2).unwrap());
    }

    #[test]
    fn corrupt_entries_are_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path());
        cache.load_or_build(2, 2).unwrap();
        let path = cache.path_for(2, 2);
        let text = fs::read_to_string(&path).unwrap();
        // Drop one cell: the counts no longer sum to the total.
        let mut cached: CachedTable = serde_json::from_str(&text).unwrap();
        cached.cells.pop();
        fs::write(&path, serde_json::to_string(&cached).unwrap()).unwrap();
        let fresh = TableCache::new(dir.path());
        assert!(!fresh.contains(2, 2));
        assert_eq!(
            *fresh.load_or_build(2, 2).unwrap(),
            ExactNullTable::build(2, 2).unwrap()
        );
        fs::write(&path, "not json").unwrap();
        assert!(!TableCache::new(dir.path()).contains(2, 2));
    }

    #[test]
    fn in_memory_provider_memoizes() {
        let p = InMemoryTables::default();
        let a = p.table(2, 1).unwrap();
        let b = p.table(2, 1).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
