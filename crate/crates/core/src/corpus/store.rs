//! On-disk record formats for documents and labeled paragraphs.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{label_access, AccessLabel, CorpusError, Paragraph};
use crate::jsonl;

/// Document metadata without chapter text; enough to render quiz prompts
/// and compute membership labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub doc_id: String,
    pub title: String,
    pub author: String,
    pub publication_date: NaiveDate,
    pub n_chapters: u32,
    #[serde(default)]
    pub exclude_from_scoring: bool,
}

/// One paragraph-store line: the paragraph plus its access label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphRecord {
    pub paragraph_id: String,
    pub doc_id: String,
    pub chapter_index: u32,
    pub char_offset: usize,
    pub word_count: usize,
    pub text: String,
    pub access_label: AccessLabel,
}

impl ParagraphRecord {
    pub fn from_paragraph(paragraph: &Paragraph) -> Self {
        Self {
            paragraph_id: paragraph.paragraph_id.clone(),
            doc_id: paragraph.doc_id.clone(),
            chapter_index: paragraph.chapter_index,
            char_offset: paragraph.char_offset,
            word_count: paragraph.word_count,
            text: paragraph.text.clone(),
            access_label: label_access(paragraph),
        }
    }

    pub fn paragraph(&self) -> Paragraph {
        Paragraph {
            paragraph_id: self.paragraph_id.clone(),
            doc_id: self.doc_id.clone(),
            chapter_index: self.chapter_index,
            char_offset: self.char_offset,
            text: self.text.clone(),
            word_count: self.word_count,
        }
    }
}

pub fn write_paragraph_store(path: &Path, records: &[ParagraphRecord]) -> Result<(), CorpusError> {
    Ok(jsonl::write_records(path, records)?)
}

pub fn read_paragraph_store(path: &Path) -> Result<Vec<ParagraphRecord>, CorpusError> {
    Ok(jsonl::read_records(path)?)
}

pub fn write_document_meta(path: &Path, metas: &[DocumentMeta]) -> Result<(), CorpusError> {
    Ok(jsonl::write_records(path, metas)?)
}

pub fn read_document_meta(path: &Path) -> Result<Vec<DocumentMeta>, CorpusError> {
    Ok(jsonl::read_records(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paragraph_record_round_trip_keeps_label() {
        let p = Paragraph {
            paragraph_id: "d:2:1600".into(),
            doc_id: "d".into(),
            chapter_index: 2,
            char_offset: 1600,
            text: "some text".into(),
            word_count: 2,
        };
        let rec = ParagraphRecord::from_paragraph(&p);
        assert_eq!(rec.access_label, AccessLabel::NonPublic);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("paragraphs.jsonl");
        write_paragraph_store(&path, &[rec.clone()]).unwrap();
        let back = read_paragraph_store(&path).unwrap();
        assert_eq!(back, vec![rec]);
        assert_eq!(back[0].paragraph(), p);
    }
}
