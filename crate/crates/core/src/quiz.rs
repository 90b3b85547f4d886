//! Four-option verbatim-identification quizzes.
//!
//! Each paragraph with a validated paraphrase set yields exactly 24 quiz
//! instances, one per permutation of the four option texts, so that every
//! answer position (A-D) hosts the original exactly six times. Enumerating
//! all orderings neutralizes any position preference of the target model.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::DocumentMeta;
use crate::jsonl;
use crate::paraphrase::ValidatedParaphraseSet;

/// System prompt sent with every quiz request.
pub const QUIZ_SYSTEM_PROMPT: &str = "You are a helpful assistant. You must answer using only \
the provided options A, B, C, or D, you may not decline to answer.";

/// One of the four option positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    C,
    D,
}

impl Choice {
    pub const ALL: [Choice; 4] = [Choice::A, Choice::B, Choice::C, Choice::D];

    pub fn from_index(index: usize) -> Choice {
        Self::ALL[index]
    }

    pub fn index(self) -> usize {
        match self {
            Choice::A => 0,
            Choice::B => 1,
            Choice::C => 2,
            Choice::D => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Choice::A => "A",
            Choice::B => "B",
            Choice::C => "C",
            Choice::D => "D",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All permutations of (0,1,2,3) in lexicographic order. `PERMUTATIONS[i][slot]`
/// is the source index shown at option slot `slot`: source 0 is the original
/// text, sources 1-3 are the paraphrases. Index 0 therefore shows the
/// original at A followed by the paraphrases in order.
pub const PERMUTATIONS: [[usize; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];

/// One rendered-ready quiz: four option texts in permutation order plus the
/// position of the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizInstance {
    pub quiz_id: String,
    pub paragraph_id: String,
    pub permutation_index: u8,
    pub options: [String; 4],
    pub answer_key: Choice,
}

/// The target model's answer to one quiz instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizResult {
    pub quiz_id: String,
    pub model_name: String,
    pub chosen: Choice,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<BTreeMap<Choice, f64>>,
    /// Fingerprint of the cached raw response this result was parsed from.
    pub raw_response_id: String,
}

/// Stable identifier for (paragraph, permutation); identical across runs
/// and machines.
pub fn quiz_id(paragraph_id: &str, permutation_index: u8) -> String {
    let mut hasher = Sha256::new();
    hasher.update(paragraph_id.as_bytes());
    hasher.update([b':', permutation_index]);
    hex::encode(&hasher.finalize()[..8])
}

impl QuizInstance {
    /// Builds the instance for one permutation of a validated set.
    pub fn from_set(set: &ValidatedParaphraseSet, permutation_index: u8) -> QuizInstance {
        let set = set.as_inner();
        let sources: [&str; 4] = [
            &set.original,
            &set.paraphrases[0],
            &set.paraphrases[1],
            &set.paraphrases[2],
        ];
        let perm = PERMUTATIONS[permutation_index as usize];
        let options: [String; 4] = std::array::from_fn(|slot| sources[perm[slot]].to_string());
        let answer_slot = perm.iter().position(|&s| s == 0).expect("original present");
        QuizInstance {
            quiz_id: quiz_id(&set.paragraph_id, permutation_index),
            paragraph_id: set.paragraph_id.clone(),
            permutation_index,
            options,
            answer_key: Choice::from_index(answer_slot),
        }
    }
}

/// Enumerates all 24 position permutations for one paragraph.
pub fn enumerate_permutations(set: &ValidatedParaphraseSet) -> Vec<QuizInstance> {
    (0..PERMUTATIONS.len() as u8)
        .map(|i| QuizInstance::from_set(set, i))
        .collect()
}

/// Renders the (system, user) prompt pair for a quiz instance.
///
/// The user prompt names the book and author, lists the four options labeled
/// A-D in instance order, and ends with `Answer:`. Rendering is pure; two
/// instances differing only in permutation render identically except for
/// option order.
pub fn render_quiz_prompt(q: &QuizInstance, doc: &DocumentMeta) -> (String, String) {
    let user = format!(
        "Question: Which of the following passages is verbatim from the \"{title}\" book by {author}?\n\
         \n\
         Options:\n\
         \n\
         A. {a}\n\
         \n\
         B. {b}\n\
         \n\
         C. {c}\n\
         \n\
         D. {d}\n\
         \n\
         Answer:",
        title = doc.title,
        author = doc.author,
        a = q.options[0],
        b = q.options[1],
        c = q.options[2],
        d = q.options[3],
    );
    (QUIZ_SYSTEM_PROMPT.to_string(), user)
}

/// Slim quiz-store line; option texts are reconstructed from the paraphrase
/// store by permutation index, keeping storage small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizRecord {
    pub quiz_id: String,
    pub paragraph_id: String,
    pub permutation_index: u8,
    pub answer_key: Choice,
}

impl QuizRecord {
    pub fn from_instance(q: &QuizInstance) -> Self {
        Self {
            quiz_id: q.quiz_id.clone(),
            paragraph_id: q.paragraph_id.clone(),
            permutation_index: q.permutation_index,
            answer_key: q.answer_key,
        }
    }
}

pub fn write_quiz_store(path: &Path, records: &[QuizRecord]) -> Result<(), jsonl::JsonlError> {
    jsonl::write_records(path, records)
}

pub fn read_quiz_store(path: &Path) -> Result<Vec<QuizRecord>, jsonl::JsonlError> {
    jsonl::read_records(path)
}
