//! Append-only response cache keyed by request fingerprint.
//!
//! One JSON record per line. Writes are serialized through a single
//! append-mode handle and flushed per record; readers tolerate a torn final
//! line, so a killed run loses at most the response that was being written.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::jsonl;
use crate::provider::ProviderKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    pub fingerprint: String,
    pub kind: ProviderKind,
    pub model: String,
    pub body: Value,
    pub received_at: DateTime<Utc>,
}

pub struct ResponseCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, Value>>,
    writer: Mutex<BufWriter<File>>,
}

impl ResponseCache {
    /// Opens (creating if needed) the cache file and loads all stored
    /// responses into memory.
    pub fn open(path: &Path) -> Result<Self, jsonl::JsonlError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| jsonl::JsonlError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let records: Vec<CacheRecord> = jsonl::read_records_tolerant(path)?;
            for record in records {
                entries.insert(record.fingerprint, record.body);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| jsonl::JsonlError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(ResponseCache {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the stored body for a fingerprint, unchanged.
    pub fn get(&self, fingerprint: &str) -> Option<Value> {
        self.entries
            .lock()
            .expect("cache lock")
            .get(fingerprint)
            .cloned()
    }

    /// Appends one response and flushes it to disk before returning.
    pub fn append(
        &self,
        fingerprint: &str,
        kind: ProviderKind,
        model: &str,
        body: &Value,
    ) -> Result<(), jsonl::JsonlError> {
        let record = CacheRecord {
            fingerprint: fingerprint.to_string(),
            kind,
            model: model.to_string(),
            body: body.clone(),
            received_at: Utc::now(),
        };
        let line = serde_json::to_string(&record).expect("cache record serializes");
        {
            let mut writer = self.writer.lock().expect("cache writer lock");
            writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .and_then(|_| writer.flush())
                .map_err(|source| jsonl::JsonlError::Io {
                    path: self.path.display().to_string(),
                    source,
                })?;
        }
        self.entries
            .lock()
            .expect("cache lock")
            .insert(record.fingerprint, record.body);
        Ok(())
    }
}
