//! Deterministic in-process provider for tests and synthetic runs.
//!
//! The mock answers quiz requests through the simulator's planted-memorization
//! model (or a fixed token), generates well-formed paraphrase responses by
//! deterministic word substitution, and instruments itself: network-call
//! counts, per-fingerprint success counts, and the maximum number of
//! concurrent in-flight requests ever observed. A fault plan can inject
//! transient 429s, a permanent outage from a given call index, or
//! out-of-domain answer tokens for chosen paragraphs.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::provider::{ChatClient, ChatRequest, Completion, ProviderError};
use crate::simulator::{answer_probability_raw, answer_rng, draw_answer, VOCAB};
use crate::{derive_rng, quiz::Choice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockSettings {
    pub behavior: MockBehavior,
    /// Artificial per-call latency; useful when asserting the in-flight bound.
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MockBehavior {
    /// Answer correctly with the planted per-class probabilities.
    Synthetic {
        p_member: f64,
        p_nonmember: f64,
        #[serde(default)]
        p_public_boost: f64,
        seed: u64,
    },
    /// Always emit this exact token (e.g. "E" to exercise choice parsing).
    FixedToken { token: String },
    /// Always answer the instance's answer key.
    AlwaysCorrect,
}

/// Counters exposed for tests; all monotone, safe under concurrency.
#[derive(Debug, Default)]
pub struct MockStats {
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    successes_by_fingerprint: Mutex<HashMap<String, usize>>,
}

impl MockStats {
    /// Total network-equivalent calls (cache hits never reach the mock).
    pub fn network_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of concurrently in-flight requests observed.
    pub fn max_in_flight_seen(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    /// Number of fingerprints successfully served more than once; nonzero
    /// means the response cache failed to deduplicate.
    pub fn duplicate_successes(&self) -> usize {
        self.successes_by_fingerprint
            .lock()
            .expect("stats lock")
            .values()
            .filter(|&&n| n > 1)
            .count()
    }

    pub fn distinct_fingerprints_served(&self) -> usize {
        self.successes_by_fingerprint
            .lock()
            .expect("stats lock")
            .len()
    }
}

/// Injectable failures, indexed by global call order.
#[derive(Debug, Default, Clone)]
pub struct FaultPlan {
    /// The first N calls fail with HTTP 429 (then succeed on retry).
    pub transient_429_first: usize,
    /// All calls from this index onward fail with a transport error,
    /// simulating a mid-batch outage.
    pub dead_from_call: Option<usize>,
    /// Quiz requests for these paragraphs answer with a token outside A-D.
    pub unparseable_paragraphs: HashSet<String>,
}

pub struct MockClient {
    settings: MockSettings,
    stats: Arc<MockStats>,
    fault: Mutex<FaultPlan>,
}

impl MockClient {
    pub fn new(settings: MockSettings) -> Self {
        MockClient {
            settings,
            stats: Arc::new(MockStats::default()),
            fault: Mutex::new(FaultPlan::default()),
        }
    }

    pub fn stats(&self) -> Arc<MockStats> {
        Arc::clone(&self.stats)
    }

    /// Replaces the active fault plan (e.g. cleared between a simulated
    /// outage and the resumed run).
    pub fn set_fault(&self, plan: FaultPlan) {
        *self.fault.lock().expect("fault lock") = plan;
    }

    fn answer_quiz(&self, request: &ChatRequest) -> Result<Value, ProviderError> {
        let context = request.context.as_ref().ok_or_else(|| {
            ProviderError::Config("mock quiz request without request context".into())
        })?;
        {
            let fault = self.fault.lock().expect("fault lock");
            if fault.unparseable_paragraphs.contains(&context.paragraph_id) {
                return Ok(json!({"token": "E"}));
            }
        }
        let (choice, p) = match &self.settings.behavior {
            MockBehavior::FixedToken { token } => return Ok(json!({ "token": token })),
            MockBehavior::AlwaysCorrect => (context.answer_key, 1.0),
            MockBehavior::Synthetic {
                p_member,
                p_nonmember,
                p_public_boost,
                seed,
            } => {
                let p = answer_probability_raw(
                    context.membership,
                    context.access,
                    *p_member,
                    *p_nonmember,
                    *p_public_boost,
                );
                let mut rng = answer_rng(*seed, &context.paragraph_id, context.permutation_index);
                (draw_answer(context.answer_key, p, &mut rng), p)
            }
        };
        // plausible letter logprobs implied by the answer distribution
        let p = p.clamp(1e-6, 1.0 - 1e-6);
        let mut logprobs = serde_json::Map::new();
        for letter in Choice::ALL {
            let lp = if letter == choice {
                p.ln()
            } else {
                ((1.0 - p) / 3.0).ln()
            };
            logprobs.insert(letter.as_str().to_string(), json!(lp));
        }
        Ok(json!({"token": choice.as_str(), "logprobs": logprobs}))
    }

    fn answer_paraphrase(&self, request: &ChatRequest) -> Result<Value, ProviderError> {
        let original = request
            .user
            .rsplit_once("Example A: ")
            .map(|(_, after)| after)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                ProviderError::Config("mock paraphrase request without Example A text".into())
            })?;
        let seed = match &self.settings.behavior {
            MockBehavior::Synthetic { seed, .. } => *seed,
            _ => 0,
        };
        let rewrites = mock_paraphrases(original, seed);
        let text = format!(
            "Example B: {}\nExample C: {}\nExample D: {}",
            rewrites[0], rewrites[1], rewrites[2]
        );
        Ok(json!({ "text": text }))
    }
}

impl ChatClient for MockClient {
    fn complete(&self, request: &ChatRequest, fingerprint: &str) -> Result<Value, ProviderError> {
        let call_index = self.stats.calls.fetch_add(1, Ordering::SeqCst);
        let now_in_flight = self.stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.stats
            .max_in_flight
            .fetch_max(now_in_flight, Ordering::SeqCst);

        let result = (|| {
            {
                let fault = self.fault.lock().expect("fault lock");
                if let Some(dead_from) = fault.dead_from_call {
                    if call_index >= dead_from {
                        return Err(ProviderError::Transport("mock provider offline".into()));
                    }
                }
                if call_index < fault.transient_429_first {
                    return Err(ProviderError::RateLimited);
                }
            }
            if self.settings.latency_ms > 0 {
                std::thread::sleep(std::time::Duration::from_millis(self.settings.latency_ms));
            }
            if request.settings.max_tokens == Some(1) {
                self.answer_quiz(request)
            } else {
                self.answer_paraphrase(request)
            }
        })();

        self.stats.in_flight.fetch_sub(1, Ordering::SeqCst);
        if result.is_ok() {
            *self
                .stats
                .successes_by_fingerprint
                .lock()
                .expect("stats lock")
                .entry(fingerprint.to_string())
                .or_insert(0) += 1;
        }
        result
    }
}

pub fn extract_mock_completion(body: &Value) -> Result<Completion, ProviderError> {
    let token = body["token"]
        .as_str()
        .ok_or_else(|| ProviderError::MalformedResponse("missing field token".into()))?
        .to_string();
    let logprobs = body["logprobs"].as_object().map(|map| {
        let mut out = std::collections::BTreeMap::new();
        for (key, value) in map {
            if let (Ok(choice), Some(lp)) =
                (crate::provider::parse_choice(key), value.as_f64())
            {
                out.insert(choice, lp);
            }
        }
        out
    });
    Ok(Completion {
        token,
        logprobs: logprobs.filter(|m| !m.is_empty()),
    })
}

pub fn extract_mock_text(body: &Value) -> Result<String, ProviderError> {
    body["text"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| ProviderError::MalformedResponse("missing field text".into()))
}

/// Three deterministic rewrites of `original`: variant v replaces the words
/// at positions congruent to v mod 3 with vocabulary words. Each variant
/// differs from the original and from the others while keeping the exact
/// word count, so the sets always validate. Texts shorter than three words
/// instead get a per-variant suffix word.
pub fn mock_paraphrases(original: &str, seed: u64) -> [String; 3] {
    let words: Vec<&str> = original.split_whitespace().collect();
    std::array::from_fn(|variant| {
        let mut rng = derive_rng(
            seed,
            &[b"mock-paraphrase", original.as_bytes(), &[variant as u8]],
        );
        if words.len() < 3 {
            return format!("{} {}", original.trim(), VOCAB[variant]);
        }
        let mut out: Vec<String> = Vec::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            if i % 3 == variant {
                let replacement = loop {
                    use rand::Rng;
                    let candidate = VOCAB[rng.gen_range(0..VOCAB.len())];
                    if candidate != *word {
                        break candidate;
                    }
                };
                out.push(replacement.to_string());
            } else {
                out.push((*word).to_string());
            }
        }
        out.join(" ")
    })
}
