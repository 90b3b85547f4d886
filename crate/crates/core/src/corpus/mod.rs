//! Corpus ingestion, paragraph chunking, and access/membership labeling.
//!
//! Documents arrive as a manifest plus one UTF-8 text file per chapter. They
//! are chunked into paragraphs of roughly 120 words (whole sentences only)
//! and every paragraph gets two labels:
//!
//! * [`AccessLabel`]: `Public` when the paragraph starts inside preview
//!   content (chapters 1 and 4 in full, plus the first 1,500 characters of
//!   every chapter), `NonPublic` otherwise.
//! * [`MembershipLabel`]: decided per target model by comparing the book's
//!   publication year with the model's training-cutoff year. Books published
//!   during the cutoff year itself are `Excluded` from all statistics.

mod chunk;
mod ingest;
mod segment;
mod store;
mod trigram;

pub use chunk::{chunk_paragraphs, CHUNK_KEEP_MIN_WORDS, CHUNK_MAX_WORDS, CHUNK_MIN_WORDS};
pub use ingest::{ingest_document, load_document, read_manifest, write_manifest, ManifestEntry};
pub use segment::split_sentences;
pub use store::{
    read_document_meta, read_paragraph_store, write_document_meta, write_paragraph_store,
    DocumentMeta, ParagraphRecord,
};
pub use trigram::trigram_stats;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Chapter indices whose entire text is publicly previewable.
pub const PUBLIC_CHAPTERS: [u32; 2] = [1, 4];
/// Number of leading characters of every chapter that are publicly previewable.
pub const PUBLIC_PREVIEW_CHARS: usize = 1500;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid publication date {value:?} for document {doc_id}")]
    InvalidDate { doc_id: String, value: String },
    #[error("document {doc_id} has no chapters")]
    EmptyDocument { doc_id: String },
    #[error("cannot read chapter source {path}: {source}")]
    ChapterSource {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model {model_name}: cutoff_year {cutoff_year} does not match cutoff_date {cutoff_date}")]
    CutoffMismatch {
        model_name: String,
        cutoff_year: i32,
        cutoff_date: NaiveDate,
    },
    #[error(transparent)]
    Store(#[from] crate::jsonl::JsonlError),
}

/// A source document with ordered chapter text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub author: String,
    pub publication_date: NaiveDate,
    pub chapters: Vec<Chapter>,
    /// Kept out of AUROC statistics when set (calibration-only documents).
    #[serde(default)]
    pub exclude_from_scoring: bool,
}

impl Document {
    pub fn meta(&self) -> DocumentMeta {
        DocumentMeta {
            doc_id: self.doc_id.clone(),
            title: self.title.clone(),
            author: self.author.clone(),
            publication_date: self.publication_date,
            n_chapters: self.chapters.len() as u32,
            exclude_from_scoring: self.exclude_from_scoring,
        }
    }
}

/// One chapter of a document; indices are 1-based and contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    pub index: u32,
    pub text: String,
}

/// A chunk of consecutive whole sentences from one chapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub paragraph_id: String,
    pub doc_id: String,
    pub chapter_index: u32,
    /// 0-based character (not byte) offset of the paragraph start within its chapter.
    pub char_offset: usize,
    pub text: String,
    pub word_count: usize,
}

/// Whether a paragraph falls inside the freely previewable portion of a book.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessLabel {
    Public,
    NonPublic,
}

/// Temporal membership relative to one target model's training cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipLabel {
    /// Published before the cutoff year; may be in the training set.
    PotentialMember,
    /// Published after the cutoff year; cannot be in the training set.
    NonMember,
    /// Published during the cutoff year; never scored.
    Excluded,
}

/// A target model plus the cutoff that drives membership labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_name: String,
    pub cutoff_date: NaiveDate,
    pub cutoff_year: i32,
    /// Key into the run configuration's provider table.
    pub provider: String,
}

impl ModelSpec {
    pub fn new(
        model_name: impl Into<String>,
        cutoff_date: NaiveDate,
        provider: impl Into<String>,
    ) -> Self {
        Self {
            model_name: model_name.into(),
            cutoff_date,
            cutoff_year: cutoff_date.year(),
            provider: provider.into(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.cutoff_year != self.cutoff_date.year() {
            return Err(CorpusError::CutoffMismatch {
                model_name: self.model_name.clone(),
                cutoff_year: self.cutoff_year,
                cutoff_date: self.cutoff_date,
            });
        }
        Ok(())
    }
}

/// Labels a paragraph as preview (public) or paywalled (non-public) content.
///
/// The boundary test uses the paragraph's starting offset: a paragraph that
/// straddles the 1,500-character preview edge still counts as `Public`
/// because the preview exposes its beginning.
pub fn label_access(paragraph: &Paragraph) -> AccessLabel {
    if PUBLIC_CHAPTERS.contains(&paragraph.chapter_index)
        || paragraph.char_offset < PUBLIC_PREVIEW_CHARS
    {
        AccessLabel::Public
    } else {
        AccessLabel::NonPublic
    }
}

/// Labels a document's membership class for one target model.
///
/// Comparison is by calendar year, so every book published during the
/// cutoff year is excluded regardless of month.
pub fn label_membership(doc: &Document, model: &ModelSpec) -> MembershipLabel {
    membership_for_date(doc.publication_date, model)
}

pub fn membership_for_date(publication_date: NaiveDate, model: &ModelSpec) -> MembershipLabel {
    let year = publication_date.year();
    if year == model.cutoff_year {
        MembershipLabel::Excluded
    } else if year < model.cutoff_year {
        MembershipLabel::PotentialMember
    } else {
        MembershipLabel::NonMember
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn para(chapter_index: u32, char_offset: usize) -> Paragraph {
        Paragraph {
            paragraph_id: format!("d:{chapter_index}:{char_offset}"),
            doc_id: "d".into(),
            chapter_index,
            char_offset,
            text: "stub".into(),
            word_count: 1,
        }
    }

    fn model(cutoff: &str) -> ModelSpec {
        ModelSpec::new("m", cutoff.parse().unwrap(), "p")
    }

    fn doc(date: &str) -> Document {
        Document {
            doc_id: "d".into(),
            title: "T".into(),
            author: "A".into(),
            publication_date: date.parse().unwrap(),
            chapters: vec![Chapter { index: 1, text: String::new() }],
            exclude_from_scoring: false,
        }
    }

    #[test]
    fn chapter_four_is_public_at_any_offset() {
        assert_eq!(label_access(&para(4, 9000)), AccessLabel::Public);
    }

    #[test]
    fn preview_prefix_is_public() {
        assert_eq!(label_access(&para(2, 0)), AccessLabel::Public);
        assert_eq!(label_access(&para(2, 1499)), AccessLabel::Public);
    }

    #[test]
    fn offset_at_preview_edge_is_non_public() {
        assert_eq!(label_access(&para(2, 1500)), AccessLabel::NonPublic);
        assert_eq!(label_access(&para(7, 20_000)), AccessLabel::NonPublic);
    }

    #[test]
    fn access_labeling_is_idempotent() {
        let p = para(3, 1200);
        assert_eq!(label_access(&p), label_access(&p));
    }

    #[test]
    fn membership_before_cutoff_year_is_potential_member() {
        let m = model("2023-10-01");
        assert_eq!(
            label_membership(&doc("2020-05-12"), &m),
            MembershipLabel::PotentialMember
        );
    }

    #[test]
    fn membership_after_cutoff_year_is_non_member() {
        let m = model("2023-10-01");
        assert_eq!(
            label_membership(&doc("2024-03-11"), &m),
            MembershipLabel::NonMember
        );
    }

    #[test]
    fn membership_during_cutoff_year_is_excluded() {
        let m = model("2023-10-01");
        // Even a book published before the cutoff *date* is excluded when it
        // shares the cutoff year.
        assert_eq!(
            label_membership(&doc("2023-06-29"), &m),
            MembershipLabel::Excluded
        );
    }

    #[test]
    fn model_spec_validates_year_consistency() {
        let mut m = model("2023-10-01");
        assert!(m.validate().is_ok());
        m.cutoff_year = 2022;
        assert!(matches!(m.validate(), Err(CorpusError::CutoffMismatch { .. })));
    }
}
