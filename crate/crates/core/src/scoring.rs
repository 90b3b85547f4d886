//! Guess rates per paragraph and aggregate rates per book.
//!
//! The guess rate is the fraction of a paragraph's quiz permutations the
//! target model answered correctly. Book scores are unweighted means over
//! paragraph rates; pooled rates are quiz-weighted (summed numerators over
//! summed denominators), matching the distinction between per-book averages
//! and corpus-wide pooling in the report tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AccessLabel, MembershipLabel};
use crate::jsonl;
use crate::quiz::QuizResult;
use crate::stats::AccessSplit;

/// Paragraphs with fewer parseable results than this are flagged
/// low-coverage and excluded from statistics.
pub const LOW_COVERAGE_MIN: u32 = 18;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("no parseable results for paragraph {paragraph_id}")]
    NoResults { paragraph_id: String },
    #[error("no paragraphs in the requested split")]
    EmptySplit,
    #[error("no paragraphs in the requested selection")]
    EmptySelection,
}

/// Identification rate of one paragraph over its quiz permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessRate {
    pub paragraph_id: String,
    pub n_quizzes: u32,
    pub n_correct: u32,
    pub rate: f64,
}

/// Mean identification rate over one book's paragraphs in a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookScore {
    pub doc_id: String,
    pub split: AccessSplit,
    pub mean_rate: f64,
    pub n_paragraphs: usize,
}

/// Scores-file line: one scored paragraph with both labels attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub paragraph_id: String,
    pub doc_id: String,
    pub access_label: AccessLabel,
    pub membership_label: MembershipLabel,
    pub n_quizzes: u32,
    pub n_correct: u32,
    pub rate: f64,
    /// Set when fewer than the configured minimum of the 24 permutations
    /// produced a parseable answer; such rows never enter statistics.
    #[serde(default)]
    pub low_coverage: bool,
}

/// Computes the guess rate from the parseable results of one paragraph.
pub fn guess_rate(paragraph_id: &str, results: &[QuizResult]) -> Result<GuessRate, ScoringError> {
    if results.is_empty() {
        return Err(ScoringError::NoResults {
            paragraph_id: paragraph_id.to_string(),
        });
    }
    let n_quizzes = results.len() as u32;
    let n_correct = results.iter().filter(|r| r.correct).count() as u32;
    Ok(GuessRate {
        paragraph_id: paragraph_id.to_string(),
        n_quizzes,
        n_correct,
        rate: f64::from(n_correct) / f64::from(n_quizzes),
    })
}

/// Unweighted mean of the paragraph rates of one book within a split.
pub fn book_mean(
    doc_id: &str,
    split: AccessSplit,
    records: &[ScoreRecord],
) -> Result<BookScore, ScoringError> {
    let rates: Vec<f64> = records
        .iter()
        .filter(|r| r.doc_id == doc_id && split.matches(r.access_label))
        .map(|r| r.rate)
        .collect();
    if rates.is_empty() {
        return Err(ScoringError::EmptySplit);
    }
    Ok(BookScore {
        doc_id: doc_id.to_string(),
        split,
        mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
        n_paragraphs: rates.len(),
    })
}

/// Quiz-weighted pooled rate over the selected paragraphs:
/// sum(n_correct) / sum(n_quizzes).
pub fn pooled_rate(
    records: &[ScoreRecord],
    membership: MembershipLabel,
    split: AccessSplit,
) -> Result<f64, ScoringError> {
    let mut correct = 0u64;
    let mut total = 0u64;
    for r in records {
        if r.membership_label == membership && split.matches(r.access_label) {
            correct += u64::from(r.n_correct);
            total += u64::from(r.n_quizzes);
        }
    }
    if total == 0 {
        return Err(ScoringError::EmptySelection);
    }
    Ok(correct as f64 / total as f64)
}

pub fn write_scores(path: &Path, records: &[ScoreRecord]) -> Result<(), jsonl::JsonlError> {
    jsonl::write_records(path, records)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>, jsonl::JsonlError> {
    jsonl::read_records(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiz::Choice;

    fn result(correct: bool) -> QuizResult {
        QuizResult {
            quiz_id: "q".into(),
            model_name: "m".into(),
            chosen: Choice::A,
            correct,
            logprobs: None,
            raw_response_id: "fp".into(),
        }
    }

    fn results(correct: usize, total: usize) -> Vec<QuizResult> {
        (0..total).map(|i| result(i < correct)).collect()
    }

    fn record(
        doc_id: &str,
        rate: f64,
        access: AccessLabel,
        membership: MembershipLabel,
        n_correct: u32,
        n_quizzes: u32,
    ) -> ScoreRecord {
        ScoreRecord {
            paragraph_id: format!("{doc_id}:p{n_correct}:{rate}"),
            doc_id: doc_id.into(),
            access_label: access,
            membership_label: membership,
            n_quizzes,
            n_correct,
            rate,
            low_coverage: n_quizzes < LOW_COVERAGE_MIN,
        }
    }

    #[test]
    fn half_correct_gives_half_rate() {
        let gr = guess_rate("p", &results(12, 24)).unwrap();
        assert_eq!(gr.rate, 0.5);
        assert_eq!(gr.n_quizzes, 24);
        assert_eq!(gr.n_correct, 12);
    }

    #[test]
    fn all_correct_gives_one() {
        assert_eq!(guess_rate("p", &results(24, 24)).unwrap().rate, 1.0);
    }

    #[test]
    fn partial_coverage_uses_parseable_denominator() {
        let gr = guess_rate("p", &results(10, 20)).unwrap();
        assert_eq!(gr.rate, 0.5);
        assert_eq!(gr.n_quizzes, 20);
    }

    #[test]
    fn no_results_is_an_error() {
        assert_eq!(
            guess_rate("p", &[]).unwrap_err(),
            ScoringError::NoResults { paragraph_id: "p".into() }
        );
    }

    #[test]
    fn book_mean_is_unweighted() {
        let records = vec![
            record("b", 0.2, AccessLabel::Public, MembershipLabel::PotentialMember, 2, 10),
            record("b", 0.4, AccessLabel::Public, MembershipLabel::PotentialMember, 8, 20),
            record("b", 0.6, AccessLabel::Public, MembershipLabel::PotentialMember, 6, 10),
        ];
        let score = book_mean("b", AccessSplit::All, &records).unwrap();
        assert!((score.mean_rate - 0.4).abs() < 1e-15);
        assert_eq!(score.n_paragraphs, 3);
    }

    #[test]
    fn single_paragraph_book_mean() {
        let records = vec![record(
            "b", 0.75, AccessLabel::NonPublic, MembershipLabel::PotentialMember, 18, 24,
        )];
        let score = book_mean("b", AccessSplit::NonPublic, &records).unwrap();
        assert_eq!(score.mean_rate, 0.75);
    }

    #[test]
    fn empty_split_is_an_error() {
        let records = vec![record(
            "b", 0.75, AccessLabel::NonPublic, MembershipLabel::PotentialMember, 18, 24,
        )];
        assert_eq!(
            book_mean("b", AccessSplit::Public, &records).unwrap_err(),
            ScoringError::EmptySplit
        );
    }

    #[test]
    fn pooled_rate_is_quiz_weighted() {
        let records = vec![
            record("a", 1.0, AccessLabel::Public, MembershipLabel::PotentialMember, 24, 24),
            record("b", 0.0, AccessLabel::Public, MembershipLabel::PotentialMember, 0, 24),
        ];
        let pooled =
            pooled_rate(&records, MembershipLabel::PotentialMember, AccessSplit::All).unwrap();
        assert_eq!(pooled, 0.5);
    }

    #[test]
    fn pooled_rate_uniform_inputs() {
        let records: Vec<ScoreRecord> = (0..5)
            .map(|_| record("a", 7.0 / 24.0, AccessLabel::Public, MembershipLabel::NonMember, 7, 24))
            .collect();
        let pooled = pooled_rate(&records, MembershipLabel::NonMember, AccessSplit::All).unwrap();
        assert!((pooled - 7.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let records = vec![record(
            "a", 0.5, AccessLabel::Public, MembershipLabel::PotentialMember, 12, 24,
        )];
        assert_eq!(
            pooled_rate(&records, MembershipLabel::NonMember, AccessSplit::All).unwrap_err(),
            ScoringError::EmptySelection
        );
    }

    #[test]
    fn pooling_is_additive_over_disjoint_sets() {
        let public = vec![
            record("a", 0.5, AccessLabel::Public, MembershipLabel::PotentialMember, 12, 24),
            record("b", 0.25, AccessLabel::Public, MembershipLabel::PotentialMember, 6, 24),
        ];
        let non_public = vec![
            record("a", 1.0, AccessLabel::NonPublic, MembershipLabel::PotentialMember, 24, 24),
        ];
        let mut all = public.clone();
        all.extend(non_public.clone());
        let whole = pooled_rate(&all, MembershipLabel::PotentialMember, AccessSplit::All).unwrap();
        let split_sum = (12 + 6 + 24) as f64 / 72.0;
        assert_eq!(whole, split_sum);
    }
}
