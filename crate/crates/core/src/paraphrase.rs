//! Paraphrase generation prompts, response parsing, and validation.
//!
//! The paraphrase model is asked to rewrite a paragraph three times in a
//! fixed output format ("Example B:" / "Example C:" / "Example D:"); the
//! original paragraph plays the role of Example A. Parsed sets are validated
//! before quiz construction: exactly three non-empty paraphrases, none
//! identical to the original or to each other, each within 0.5x-2.0x of the
//! original's word count.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Paragraph;
use crate::jsonl;
use crate::quiz::Choice;

/// Word-count ratio bounds a paraphrase must stay within.
pub const LENGTH_RATIO_MIN: f64 = 0.5;
pub const LENGTH_RATIO_MAX: f64 = 2.0;

/// How many times a failed generation is retried before the paragraph is
/// dropped.
pub const MAX_RETRIES: u32 = 2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParaphraseError {
    #[error("response is missing the \"Example {0}:\" label")]
    MissingLabel(Choice),
    #[error("paraphrase block {0} is empty")]
    EmptyParaphrase(Choice),
    #[error("paraphrase {index} word-count ratio {ratio:.3} outside [{LENGTH_RATIO_MIN}, {LENGTH_RATIO_MAX}]")]
    LengthOutOfBounds { index: usize, ratio: f64 },
    #[error("paraphrase {index} duplicates the original or another paraphrase")]
    DuplicateText { index: usize },
}

/// One original text plus its three machine paraphrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseSet {
    pub paragraph_id: String,
    pub original: String,
    pub paraphrases: [String; 3],
}

impl ParaphraseSet {
    /// Runs [`validate_paraphrases`] and wraps the set on success.
    pub fn validated(self) -> Result<ValidatedParaphraseSet, ParaphraseError> {
        validate_paraphrases(&self)?;
        Ok(ValidatedParaphraseSet(self))
    }
}

/// A [`ParaphraseSet`] that passed validation; guarantees four distinct
/// option texts for quiz construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParaphraseSet(ParaphraseSet);

impl ValidatedParaphraseSet {
    pub fn as_inner(&self) -> &ParaphraseSet {
        &self.0
    }

    pub fn into_inner(self) -> ParaphraseSet {
        self.0
    }
}

/// Builds the paraphrase-request prompt for one paragraph.
///
/// The template is fixed; the paragraph text is substituted after the final
/// "Example A:" marker, which makes the prompt injective in the paragraph
/// text.
pub fn build_paraphrase_prompt(paragraph: &Paragraph) -> String {
    debug_assert!(!paragraph.text.is_empty());
    format!(
        "Rewrite this entire text (all sentences with no exception) expressing the same meaning \
         using different words. Aim to keep the rewriting similar in length to the original text. \
         Do it three times. The text to be rewritten is identified as <Example A>.\n\
         \n\
         Format your output as:\n\
         Example B: <insert paraphrase B>\n\
         Example C: <insert paraphrase C>\n\
         Example D: <insert paraphrase D>\n\
         -\n\
         Example A: {}",
        paragraph.text
    )
}

/// Finds a line-initial `Example X:` marker at or after `from`, tolerating
/// leading whitespace on the line. Returns (text_start, line_start).
fn find_label(response: &str, label: &str, from: usize) -> Option<(usize, usize)> {
    let mut search_from = from;
    while let Some(rel) = response[search_from..].find(label) {
        let abs = search_from + rel;
        let line_start = response[..abs].rfind('\n').map_or(0, |i| i + 1);
        let prefix = &response[line_start..abs];
        if prefix.trim().is_empty() {
            return Some((abs + label.len(), line_start));
        }
        search_from = abs + label.len();
    }
    None
}

/// Extracts the three paraphrase blocks from a model response.
///
/// Blocks follow the line-anchored markers `Example B:`, `Example C:`, and
/// `Example D:`; any preamble before `Example B:` is ignored and block text
/// is whitespace-trimmed.
pub fn parse_paraphrase_response(
    paragraph_id: &str,
    original: &str,
    response: &str,
) -> Result<ParaphraseSet, ParaphraseError> {
    let labels = [Choice::B, Choice::C, Choice::D];
    let mut positions = Vec::with_capacity(3);
    let mut cursor = 0usize;
    for letter in labels {
        let marker = format!("Example {letter}:");
        let (text_start, line_start) = find_label(response, &marker, cursor)
            .ok_or(ParaphraseError::MissingLabel(letter))?;
        positions.push((letter, text_start, line_start));
        cursor = text_start;
    }

    let mut blocks = Vec::with_capacity(3);
    for (i, &(letter, text_start, _)) in positions.iter().enumerate() {
        let end = positions
            .get(i + 1)
            .map_or(response.len(), |&(_, _, next_line)| next_line);
        let block = response[text_start..end].trim();
        if block.is_empty() {
            return Err(ParaphraseError::EmptyParaphrase(letter));
        }
        blocks.push(block.to_string());
    }

    let mut iter = blocks.into_iter();
    Ok(ParaphraseSet {
        paragraph_id: paragraph_id.to_string(),
        original: original.to_string(),
        paraphrases: [
            iter.next().expect("three blocks"),
            iter.next().expect("three blocks"),
            iter.next().expect("three blocks"),
        ],
    })
}

/// Checks every [`ParaphraseSet`] invariant.
pub fn validate_paraphrases(set: &ParaphraseSet) -> Result<(), ParaphraseError> {
    let original_words = set.original.split_whitespace().count().max(1);
    for (i, paraphrase) in set.paraphrases.iter().enumerate() {
        if paraphrase.is_empty() {
            return Err(ParaphraseError::EmptyParaphrase(Choice::from_index(i + 1)));
        }
        if paraphrase == &set.original {
            return Err(ParaphraseError::DuplicateText { index: i });
        }
        for other in &set.paraphrases[..i] {
            if paraphrase == other {
                return Err(ParaphraseError::DuplicateText { index: i });
            }
        }
        let ratio = paraphrase.split_whitespace().count() as f64 / original_words as f64;
        if !(LENGTH_RATIO_MIN..=LENGTH_RATIO_MAX).contains(&ratio) {
            return Err(ParaphraseError::LengthOutOfBounds { index: i, ratio });
        }
    }
    Ok(())
}

/// Paraphrase-cache line: raw response plus the parsed set, or a drop marker
/// after repeated failures. Reruns consult this before any network call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParaphraseCacheRecord {
    pub paragraph_id: String,
    pub status: ParaphraseStatus,
    pub attempts: u32,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ParaphraseSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaphraseStatus {
    Ok,
    Dropped,
}

pub fn write_paraphrase_cache(
    path: &Path,
    records: &[ParaphraseCacheRecord],
) -> Result<(), jsonl::JsonlError> {
    jsonl::write_records(path, records)
}

pub fn read_paraphrase_cache(path: &Path) -> Result<Vec<ParaphraseCacheRecord>, jsonl::JsonlError> {
    jsonl::read_records_tolerant(path)
}
