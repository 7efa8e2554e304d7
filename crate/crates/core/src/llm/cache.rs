use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SamplingConfig;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path} is corrupt at line {line}")]
    Corrupt { path: String, line: usize },
}

/// Fields that identify one completion. `n` is left out so that a request
/// for more samples reuses the ones already stored.
#[derive(Serialize)]
struct KeyMaterial<'a> {
    endpoint: &'a str,
    prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    stop: &'a [String],
    sample_index: u32,
}

/// Hex SHA-256 of the canonical JSON encoding of the request identity.
pub fn cache_key(
    endpoint: &str,
    prompt: &str,
    config: &SamplingConfig,
    sample_index: u32,
) -> String {
    let material = KeyMaterial {
        endpoint,
        prompt,
        temperature: config.temperature,
        top_p: config.top_p,
        max_tokens: config.max_tokens,
        stop: &config.stop_sequences,
        sample_index,
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    value: String,
}

/// Append-only file of (key, completion) lines with an in-memory index.
/// The first value stored under a key wins.
pub struct ReplayCache {
    path: PathBuf,
    index: RwLock<HashMap<String, String>>,
    file: Mutex<File>,
}

impl ReplayCache {
    /// Opens or creates the cache file. A torn final line from an interrupted
    /// write is ignored; corruption anywhere else is an error.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let io = |source| CacheError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut index = HashMap::new();
        let mut valid_len = 0u64;
        if path.exists() {
            let content = std::fs::read_to_string(path).map_err(io)?;
            let lines: Vec<&str> = content.split_inclusive('\n').collect();
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if !line.trim().is_empty() {
                    match serde_json::from_str::<Entry>(line) {
                        Ok(e) => {
                            index.entry(e.key).or_insert(e.value);
                        }
                        Err(_) if i + 1 == last => {
                            tracing::warn!(path = %path.display(), "dropping torn last line of cache");
                            break;
                        }
                        Err(_) => {
                            return Err(CacheError::Corrupt {
                                path: path.display().to_string(),
                                line: i + 1,
                            })
                        }
                    }
                }
                valid_len += line.len() as u64;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        file.set_len(valid_len).map_err(io)?;
        if valid_len > 0 && !std::fs::read(path).map_err(io)?.ends_with(b"\n") {
            file.write_all(b"\n").map_err(io)?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            index: RwLock::new(index),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.index
            .read()
            .expect("cache index lock")
            .get(key)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `value` unless the key is present. Returns the stored value.
    pub fn put(&self, key: &str, value: &str) -> Result<String, CacheError> {
        let mut file = self.file.lock().expect("cache file lock");
        let mut index = self.index.write().expect("cache index lock");
        if let Some(existing) = index.get(key) {
            return Ok(existing.clone());
        }
        let mut line = serde_json::to_string(&Entry {
            key: key.to_string(),
            value: value.to_string(),
        })
        .expect("cache entry serializes");
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|source| CacheError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        index.insert(key.to_string(), value.to_string());
        Ok(value.to_string())
    }
}
