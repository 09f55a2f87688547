//! Content-addressed result cache: one JSON file per (config digest, command,
//! seed, tool version). Writes are atomic (temp file + rename) and a version
//! bump invalidates every old entry by construction of the key.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "SKW_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_digest: String,
    pub command: String,
    pub args: String,
    pub seed: u64,
    pub tool_version: String,
    pub created_unix: u64,
    pub outputs: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedResult {
    pub record: ResultRecord,
    pub csv: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Digest of the canonical config serialization.
pub fn config_digest(canonical_config: &str) -> String {
    sha256_hex(canonical_config.as_bytes())
}

/// Cache key over everything that determines the output bytes.
pub fn cache_key(config_digest: &str, command: &str, args: &str, seed: u64, version: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_digest.as_bytes());
    h.update([0u8]);
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(args.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    h.update([0u8]);
    h.update(version.as_bytes());
    hex::encode(h.finalize())
}

pub fn record(
    config_digest: &str,
    command: &str,
    args: &str,
    seed: u64,
    outputs: serde_json::Value,
) -> ResultRecord {
    ResultRecord {
        config_digest: config_digest.to_string(),
        command: command.to_string(),
        args: args.to_string(),
        seed,
        tool_version: TOOL_VERSION.to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs,
    }
}

pub fn default_cache_dir() -> PathBuf {
    if let Ok(dir) = std::env::var(CACHE_DIR_ENV) {
        return PathBuf::from(dir);
    }
    PathBuf::from(".skw-cache")
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{}.json", key))
}

pub fn lookup(dir: &Path, key: &str) -> Option<CachedResult> {
    let path = entry_path(dir, key);
    let text = fs::read_to_string(path).ok()?;
    let cached: CachedResult = serde_json::from_str(&text).ok()?;
    // stale tool versions never come back even if a key collides across versions
    if cached.record.tool_version != TOOL_VERSION {
        return None;
    }
    Some(cached)
}

pub fn store(dir: &Path, key: &str, value: &CachedResult) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let path = entry_path(dir, key);
    let tmp = dir.join(format!(".{}.tmp-{}", key, std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string_pretty(value).expect("serializes").as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(outputs: serde_json::Value) -> CachedResult {
        CachedResult {
            record: record("deadbeef", "point", "r1=1", 7, outputs),
            csv: "a,b\n1,2\n".into(),
        }
    }

    #[test]
    fn store_then_lookup_hits() {
        let dir = tempfile::tempdir().unwrap();
        let key = cache_key("deadbeef", "point", "r1=1", 7, TOOL_VERSION);
        let value = sample(serde_json::json!({"key_rate": 0.25}));
        store(dir.path(), &key, &value).unwrap();
        let hit = lookup(dir.path(), &key).unwrap();
        assert_eq!(hit, value);
    }

    #[test]
    fn different_config_misses() {
        let dir = tempfile::tempdir().unwrap();
        let key = cache_key("deadbeef", "point", "r1=1", 7, TOOL_VERSION);
        store(dir.path(), &key, &sample(serde_json::json!({}))).unwrap();
        let other = cache_key("cafebabe", "point", "r1=1", 7, TOOL_VERSION);
        assert!(lookup(dir.path(), &other).is_none());
    }

    #[test]
    fn version_bump_misses() {
        let dir = tempfile::tempdir().unwrap();
        let old_key = cache_key("deadbeef", "point", "r1=1", 7, "0.0.0-old");
        store(dir.path(), &old_key, &sample(serde_json::json!({}))).unwrap();
        let new_key = cache_key("deadbeef", "point", "r1=1", 7, TOOL_VERSION);
        assert_ne!(old_key, new_key);
        assert!(lookup(dir.path(), &new_key).is_none());
    }

    #[test]
    fn stale_version_inside_entry_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let key = cache_key("deadbeef", "point", "r1=1", 7, TOOL_VERSION);
        let mut value = sample(serde_json::json!({}));
        value.record.tool_version = "0.0.0-old".into();
        store(dir.path(), &key, &value).unwrap();
        assert!(lookup(dir.path(), &key).is_none());
    }
}
