//! Audit pipeline for detecting whether a language model was trained on
//! specific documents.
//!
//! The pipeline chunks documents into ~120-word paragraphs, generates three
//! machine paraphrases per paragraph, quizzes a target model with all 24
//! option orderings of a "pick the verbatim passage" multiple-choice test,
//! and quantifies recognition with guess rates, AUROC statistics, and
//! bootstrap confidence intervals. Paragraphs carry two labels: an access
//! label (publicly previewable vs. paywalled) and a temporal membership
//! label (published before vs. after the target model's training cutoff).
//!
//! A deterministic simulator generates synthetic corpora with planted
//! memorization probabilities so the whole chain can be exercised and
//! checked against analytic oracles without any network access.

pub mod corpus;
pub mod paraphrase;
pub mod pipeline;
pub mod provider;
pub mod quiz;
pub mod report;
pub mod scoring;
pub mod simulator;
pub mod stats;

mod jsonl;
mod rng;

pub use corpus::{AccessLabel, Chapter, Document, MembershipLabel, ModelSpec, Paragraph};
pub use paraphrase::ParaphraseSet;
pub use quiz::{Choice, QuizInstance, QuizResult};
pub use scoring::{BookScore, GuessRate};
pub use stats::{AurocMethod, AurocReport, LabeledScore};

pub(crate) use rng::derive_rng;
