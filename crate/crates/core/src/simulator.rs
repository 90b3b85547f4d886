//! Synthetic corpora and a synthetic target model with planted memorization.
//!
//! The simulator produces documents whose paragraphs satisfy every corpus
//! invariant, dated on either side of a fixed synthetic cutoff so membership
//! labels are planted by construction. The synthetic model answers each quiz
//! correctly with a configured probability (optionally boosted for public
//! paragraphs) and uniformly over the three wrong options otherwise.
//! [`expected_paragraph_auroc`] gives the exact AUROC implied by those
//! probabilities, which is what the end-to-end pipeline is checked against.

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AccessLabel, Chapter, Document, MembershipLabel, ModelSpec, Paragraph};
use crate::derive_rng;
use crate::quiz::{Choice, QuizInstance};

/// Publication cutoff of the synthetic target model; member books are dated
/// before this year, non-member books after it.
pub const SYNTHETIC_CUTOFF: &str = "2023-10-01";

/// Chapters per synthetic book. Chapters 1 and 4 are fully public, so this
/// yields roughly the public/non-public proportions seen in real previews.
const CHAPTERS_PER_BOOK: usize = 8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimulatorError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_books_member: usize,
    pub n_books_nonmember: usize,
    pub paragraphs_per_book: usize,
    /// Probability that the synthetic model answers correctly on a
    /// potential-member paragraph.
    pub p_member: f64,
    /// Probability of a correct answer on a non-member paragraph.
    pub p_nonmember: f64,
    /// Additive delta applied to either probability when the paragraph is
    /// public; may be negative.
    #[serde(default)]
    pub p_public_boost: f64,
    #[serde(default = "default_quizzes")]
    pub quizzes_per_paragraph: u32,
    pub seed: u64,
}

fn default_quizzes() -> u32 {
    24
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SimulatorError> {
        if self.n_books_member == 0 || self.n_books_nonmember == 0 {
            return Err(SimulatorError::InvalidConfig(
                "need at least one book per membership class".into(),
            ));
        }
        if self.paragraphs_per_book == 0 {
            return Err(SimulatorError::InvalidConfig(
                "paragraphs_per_book must be positive".into(),
            ));
        }
        if self.quizzes_per_paragraph == 0 || self.quizzes_per_paragraph > 24 {
            return Err(SimulatorError::InvalidConfig(
                "quizzes_per_paragraph must be in 1..=24".into(),
            ));
        }
        for (name, p) in [("p_member", self.p_member), ("p_nonmember", self.p_nonmember)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimulatorError::InvalidConfig(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
            let boosted = p + self.p_public_boost;
            if !(0.0..=1.0).contains(&boosted) {
                return Err(SimulatorError::InvalidConfig(format!(
                    "{name} + p_public_boost = {boosted} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// The model spec under which the synthetic corpus realizes its planted
/// membership labels.
pub fn synthetic_model_spec(model_name: &str, provider: &str) -> ModelSpec {
    ModelSpec::new(
        model_name,
        SYNTHETIC_CUTOFF.parse().expect("valid constant date"),
        provider,
    )
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub paragraphs: Vec<Paragraph>,
}

pub(crate) const VOCAB: &[&str] = &[
    "system", "data", "model", "service", "process", "layer", "table", "query", "value", "index",
    "record", "stream", "batch", "cache", "token", "schema", "field", "module", "client", "server",
    "request", "response", "result", "metric", "report", "pipeline", "stage", "config", "cluster",
    "node", "store", "update", "change", "version", "release", "build", "test", "check", "error",
    "signal", "event", "handler", "worker", "thread", "memory", "buffer", "socket", "packet",
    "network", "storage", "volume", "backup", "restore", "deploy", "monitor", "alert", "budget",
    "latency", "timeout", "retry", "policy", "access", "secret", "account", "session", "cursor",
    "filter", "mapping", "parser", "format", "output", "input", "teams", "people", "review",
    "design", "pattern", "state", "graph", "queue", "topic", "offset", "commit", "branch",
    "merge", "deltas", "window", "sample", "weight", "vector", "matrix", "tensor", "kernel",
    "driver", "engine", "runtime", "compiler", "binary", "source", "target", "object", "method",
    "function", "argument", "payload", "message", "broker", "ledger", "audit", "trace", "span",
    "context", "scope", "lease", "lock", "mutex", "region", "shard", "replica", "quorum",
    "leader", "follower", "election", "snapshot", "journal", "segment", "page", "block", "frame",
    "heap", "stack", "pointer", "handle", "routine", "job", "task", "plan", "step", "phase",
    "cycle", "round", "epoch", "tick", "clock", "timer", "guard", "probe", "gauge", "counter",
];

fn generate_sentence(rng: &mut ChaCha8Rng) -> String {
    let n_words = rng.gen_range(8..=18);
    let mut words = Vec::with_capacity(n_words);
    for i in 0..n_words {
        let word = VOCAB[rng.gen_range(0..VOCAB.len())];
        if i == 0 {
            let mut chars = word.chars();
            let first = chars.next().expect("vocab words are non-empty");
            words.push(format!("{}{}", first.to_uppercase(), chars.as_str()));
        } else {
            words.push(word.to_string());
        }
    }
    let terminator = if rng.gen_range(0..8) == 0 { "?" } else { "." };
    format!("{}{}", words.join(" "), terminator)
}

/// One paragraph of deterministic pseudo-prose: whole sentences totalling
/// 100-140ish words, keyed by (seed, doc, chapter, index) so generation is
/// order-independent.
fn generate_paragraph_text(seed: u64, doc_id: &str, chapter: u32, index: usize) -> String {
    let mut rng = derive_rng(
        seed,
        &[
            b"synthetic-text",
            doc_id.as_bytes(),
            &chapter.to_le_bytes(),
            &(index as u64).to_le_bytes(),
        ],
    );
    let target = rng.gen_range(100..=135);
    let mut sentences = Vec::new();
    let mut words = 0usize;
    while words < target {
        let sentence = generate_sentence(&mut rng);
        words += sentence.split_whitespace().count();
        sentences.push(sentence);
    }
    sentences.join(" ")
}

fn build_document(
    cfg: &SyntheticConfig,
    doc_id: String,
    title: String,
    publication_date: NaiveDate,
    out_paragraphs: &mut Vec<Paragraph>,
) -> Document {
    let per_chapter = cfg.paragraphs_per_book / CHAPTERS_PER_BOOK;
    let remainder = cfg.paragraphs_per_book % CHAPTERS_PER_BOOK;
    let mut chapters = Vec::with_capacity(CHAPTERS_PER_BOOK);
    for c in 0..CHAPTERS_PER_BOOK {
        let chapter_index = c as u32 + 1;
        let n_paragraphs = per_chapter + usize::from(c < remainder);
        let mut texts = Vec::with_capacity(n_paragraphs);
        for i in 0..n_paragraphs {
            texts.push(generate_paragraph_text(cfg.seed, &doc_id, chapter_index, i));
        }
        let mut char_offset = 0usize;
        for text in &texts {
            out_paragraphs.push(Paragraph {
                paragraph_id: format!("{doc_id}:{chapter_index}:{char_offset}"),
                doc_id: doc_id.clone(),
                chapter_index,
                char_offset,
                text: text.clone(),
                word_count: text.split_whitespace().count(),
            });
            // +2 for the parting blank line in the joined chapter text
            char_offset += text.chars().count() + 2;
        }
        chapters.push(Chapter {
            index: chapter_index,
            text: texts.join("\n\n"),
        });
    }
    Document {
        doc_id,
        title,
        author: "Synthetic Author".into(),
        publication_date,
        chapters,
        exclude_from_scoring: false,
    }
}

/// Generates a deterministic synthetic corpus realizing the configured
/// membership split.
pub fn synth_corpus(cfg: &SyntheticConfig) -> Result<SyntheticCorpus, SimulatorError> {
    cfg.validate()?;
    let mut documents = Vec::with_capacity(cfg.n_books_member + cfg.n_books_nonmember);
    let mut paragraphs = Vec::new();
    let member_base: NaiveDate = "2020-01-01".parse().expect("valid constant date");
    let nonmember_base: NaiveDate = "2024-01-01".parse().expect("valid constant date");
    for i in 0..cfg.n_books_member {
        let date = member_base + chrono::Days::new((i % 1000) as u64);
        documents.push(build_document(
            cfg,
            format!("synth-m{i:03}"),
            format!("Synthetic Volume {i:03}"),
            date,
            &mut paragraphs,
        ));
    }
    for i in 0..cfg.n_books_nonmember {
        let date = nonmember_base + chrono::Days::new((i % 300) as u64);
        documents.push(build_document(
            cfg,
            format!("synth-n{i:03}"),
            format!("Synthetic Volume {:03}", cfg.n_books_member + i),
            date,
            &mut paragraphs,
        ));
    }
    Ok(SyntheticCorpus {
        documents,
        paragraphs,
    })
}

/// Correct-answer probability for a paragraph with the given labels.
pub fn answer_probability(
    membership: MembershipLabel,
    access: AccessLabel,
    cfg: &SyntheticConfig,
) -> f64 {
    answer_probability_raw(
        membership,
        access,
        cfg.p_member,
        cfg.p_nonmember,
        cfg.p_public_boost,
    )
}

pub(crate) fn answer_probability_raw(
    membership: MembershipLabel,
    access: AccessLabel,
    p_member: f64,
    p_nonmember: f64,
    p_public_boost: f64,
) -> f64 {
    let base = match membership {
        MembershipLabel::PotentialMember => p_member,
        MembershipLabel::NonMember | MembershipLabel::Excluded => p_nonmember,
    };
    match access {
        AccessLabel::Public => base + p_public_boost,
        AccessLabel::NonPublic => base,
    }
}

/// The RNG stream the synthetic model uses for one quiz instance. Keyed by
/// (seed, paragraph, permutation) so answers are independent of submission
/// order.
pub fn answer_rng(seed: u64, paragraph_id: &str, permutation_index: u8) -> ChaCha8Rng {
    derive_rng(
        seed,
        &[
            b"synthetic-answer",
            paragraph_id.as_bytes(),
            &[permutation_index],
        ],
    )
}

/// Answers one quiz: the answer key with probability implied by the labels,
/// otherwise uniform over the three wrong options.
pub fn synth_model_answer(
    q: &QuizInstance,
    membership: MembershipLabel,
    access: AccessLabel,
    cfg: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
) -> Choice {
    let p = answer_probability(membership, access, cfg);
    draw_answer(q.answer_key, p, rng)
}

pub(crate) fn draw_answer(answer_key: Choice, p: f64, rng: &mut ChaCha8Rng) -> Choice {
    if rng.gen::<f64>() < p {
        return answer_key;
    }
    let wrong: Vec<Choice> = Choice::ALL
        .into_iter()
        .filter(|&c| c != answer_key)
        .collect();
    wrong[rng.gen_range(0..wrong.len())]
}

/// Exact AUROC between the score distributions Binomial(k, p_m)/k and
/// Binomial(k, p_n)/k: the probability that a member paragraph's guess rate
/// exceeds a non-member's, ties half-credited. Computed by direct summation
/// over the (k+1)^2 outcome pairs (via a running CDF).
pub fn expected_paragraph_auroc(p_m: f64, p_n: f64, k: u32) -> f64 {
    let pm = binomial_pmf(k, p_m);
    let pn = binomial_pmf(k, p_n);
    let mut cdf_n = 0.0f64; // P(X_n < i)
    let mut total = 0.0f64;
    for i in 0..=k as usize {
        total += pm[i] * (cdf_n + 0.5 * pn[i]);
        cdf_n += pn[i];
    }
    total
}

/// Binomial pmf vector computed in log space so large k does not underflow.
fn binomial_pmf(k: u32, p: f64) -> Vec<f64> {
    let k = k as usize;
    if p <= 0.0 {
        let mut pmf = vec![0.0; k + 1];
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        return pmf;
    }
    // ln(i!) prefix table
    let mut ln_fact = vec![0.0f64; k + 1];
    for i in 1..=k {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    (0..=k)
        .map(|i| {
            let ln_pmf = ln_fact[k] - ln_fact[i] - ln_fact[k - i]
                + i as f64 * ln_p
                + (k - i) as f64 * ln_q;
            ln_pmf.exp()
        })
        .collect()
}
