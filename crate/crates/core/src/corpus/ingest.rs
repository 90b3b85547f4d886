//! Manifest parsing and document construction.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Chapter, CorpusError, Document};
use crate::jsonl;

/// One line of the corpus manifest. Chapter paths are relative to the
/// manifest file's directory and point at UTF-8 plain-text files, in
/// chapter order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub title: String,
    pub author: String,
    /// ISO-8601 publication date.
    pub date: String,
    pub chapters: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exclude_from_scoring: bool,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    Ok(jsonl::read_records(path)?)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), CorpusError> {
    Ok(jsonl::write_records(path, entries)?)
}

fn normalize_newlines(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Builds a [`Document`] from a manifest entry and its chapter text blobs.
///
/// Chapter text is preserved byte-for-byte apart from newline normalization
/// to LF; chapter indices are assigned 1..n in manifest order.
pub fn ingest_document(
    entry: &ManifestEntry,
    chapter_sources: Vec<String>,
) -> Result<Document, CorpusError> {
    let publication_date: NaiveDate =
        entry.date.parse().map_err(|_| CorpusError::InvalidDate {
            doc_id: entry.id.clone(),
            value: entry.date.clone(),
        })?;
    if chapter_sources.is_empty() {
        return Err(CorpusError::EmptyDocument {
            doc_id: entry.id.clone(),
        });
    }
    let chapters = chapter_sources
        .into_iter()
        .enumerate()
        .map(|(i, text)| Chapter {
            index: i as u32 + 1,
            text: normalize_newlines(&text),
        })
        .collect();
    Ok(Document {
        doc_id: entry.id.clone(),
        title: entry.title.clone(),
        author: entry.author.clone(),
        publication_date,
        chapters,
        exclude_from_scoring: entry.exclude_from_scoring,
    })
}

/// Reads the chapter files named by `entry` (relative to `base_dir`) and
/// ingests the document.
pub fn load_document(entry: &ManifestEntry, base_dir: &Path) -> Result<Document, CorpusError> {
    if entry.chapters.is_empty() {
        return Err(CorpusError::EmptyDocument {
            doc_id: entry.id.clone(),
        });
    }
    let mut sources = Vec::with_capacity(entry.chapters.len());
    for rel in &entry.chapters {
        let path = base_dir.join(rel);
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::ChapterSource {
            path: path.display().to_string(),
            source,
        })?;
        sources.push(text);
    }
    ingest_document(entry, sources)
}
