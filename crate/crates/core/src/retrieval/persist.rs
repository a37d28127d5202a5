//! JSON sidecar files for built indices, keyed by corpus content, strategy
//! and parameters.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RetrievalError;

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexKey {
    pub corpus_hash: String,
    pub strategy: String,
    /// Canonical JSON of the strategy parameters.
    pub params: String,
    /// Embedding provider fingerprint, for dense indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
}

impl IndexKey {
    pub fn new<P: Serialize>(corpus_hash: &str, strategy: &str, params: &P, provider: Option<&str>) -> Self {
        Self {
            corpus_hash: corpus_hash.to_string(),
            strategy: strategy.to_string(),
            params: serde_json::to_string(params).expect("parameters serialize"),
            provider: provider.map(str::to_string),
        }
    }

    pub fn file_name(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("key serializes"));
        format!("{}-{}.json", self.strategy, &hex::encode(digest)[..16])
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar<T> {
    version: u32,
    key: IndexKey,
    index: T,
}

fn persist_err(path: &Path, message: impl ToString) -> RetrievalError {
    RetrievalError::Persist { path: path.to_path_buf(), message: message.to_string() }
}

pub fn save_index<T: Serialize>(dir: &Path, key: &IndexKey, index: &T) -> Result<PathBuf, RetrievalError> {
    fs::create_dir_all(dir).map_err(|e| persist_err(dir, e))?;
    let path = dir.join(key.file_name());
    let sidecar = Sidecar { version: INDEX_FORMAT_VERSION, key: key.clone(), index };
    let bytes = serde_json::to_vec(&sidecar).map_err(|e| persist_err(&path, e))?;
    fs::write(&path, bytes).map_err(|e| persist_err(&path, e))?;
    Ok(path)
}

/// Loads a previously saved index. A missing file, an older format version
/// or a key mismatch yield `Ok(None)` so the caller rebuilds.
pub fn load_index<T: DeserializeOwned>(dir: &Path, key: &IndexKey) -> Result<Option<T>, RetrievalError> {
    let path = dir.join(key.file_name());
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(persist_err(&path, e)),
    };
    let header: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| persist_err(&path, e))?;
    if header.get("version").and_then(|v| v.as_u64()) != Some(INDEX_FORMAT_VERSION as u64) {
        return Ok(None);
    }
    let sidecar: Sidecar<T> = serde_json::from_value(header).map_err(|e| persist_err(&path, e))?;
    Ok((sidecar.key == *key).then_some(sidecar.index))
}
