//! Uniform client for target-model and paraphrase-model services.
//!
//! One [`Provider`] wraps a chat-completion client (OpenAI-style or
//! Anthropic-style HTTP, or the deterministic in-process mock), a persistent
//! append-only response cache keyed by request fingerprint, bounded-retry
//! logic, optional request pacing, and a bounded-concurrency batch
//! submitter. Because every response is cached by fingerprint before it is
//! parsed, an interrupted batch resumes from the cache with zero duplicate
//! network calls.

mod cache;
mod http;
mod mock;

pub use cache::{CacheRecord, ResponseCache};
pub use http::HttpClient;
pub use mock::{FaultPlan, MockBehavior, MockClient, MockSettings, MockStats};

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use crate::corpus::{AccessLabel, DocumentMeta, MembershipLabel, Paragraph};
use crate::paraphrase::build_paraphrase_prompt;
use crate::quiz::{render_quiz_prompt, Choice, QuizInstance, QuizResult};

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("rate limited (HTTP 429)")]
    RateLimited,
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error("completion token {token:?} is not one of A-D")]
    UnparseableChoice { token: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("batch cancelled")]
    Cancelled,
    #[error("cache error: {0}")]
    Cache(String),
}

impl ProviderError {
    /// Transient failures worth retrying with backoff.
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Transport(_)
                | ProviderError::RateLimited
                | ProviderError::Http { status: 500..=599, .. }
        )
    }

    /// Failures that abort a whole batch instead of being recorded per item.
    pub fn fatal_for_batch(&self) -> bool {
        matches!(self, ProviderError::Auth(_) | ProviderError::Config(_))
    }
}

/// Which wire protocol a provider speaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProviderKind {
    #[serde(rename = "openai-chat")]
    OpenAiChat,
    #[serde(rename = "anthropic-chat")]
    AnthropicChat,
    #[serde(rename = "mock")]
    Mock,
}

impl ProviderKind {
    pub fn label(self) -> &'static str {
        match self {
            ProviderKind::OpenAiChat => "openai-chat",
            ProviderKind::AnthropicChat => "anthropic-chat",
            ProviderKind::Mock => "mock",
        }
    }

    /// Whether the wire format accepts a logit_bias map.
    pub fn supports_logit_bias(self) -> bool {
        matches!(self, ProviderKind::OpenAiChat)
    }
}

/// Decoding settings serialized into each request. Unset fields are omitted
/// from the wire format; fields a provider does not support are dropped by
/// its serializer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RequestSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
    /// Token-id -> bias, with token ids as strings per the OpenAI wire
    /// format. The shipped quiz default biases ids 32-35 ("A"-"D").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logit_bias: Option<BTreeMap<String, i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_logprobs: Option<u32>,
}

impl RequestSettings {
    /// Deterministic single-token quiz settings: greedy decoding, answer
    /// letters biased up, top-20 logprobs recorded.
    pub fn quiz_defaults() -> Self {
        let logit_bias: BTreeMap<String, i64> = [("32", 100), ("33", 100), ("34", 100), ("35", 100)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        RequestSettings {
            max_tokens: Some(1),
            temperature: Some(0.0),
            seed: Some(2319),
            logit_bias: Some(logit_bias),
            logprobs: Some(true),
            top_logprobs: Some(20),
        }
    }

    /// Low-temperature long-form settings for paraphrase generation.
    pub fn paraphrase_defaults() -> Self {
        RequestSettings {
            max_tokens: Some(2048),
            temperature: Some(0.1),
            ..Default::default()
        }
    }
}

fn default_max_in_flight() -> usize {
    4
}

fn default_retry_attempts() -> u32 {
    3
}

fn default_retry_base_ms() -> u64 {
    250
}

/// Client-side pacing and concurrency limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLimits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retry_attempts")]
    pub retry_attempts: u32,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
}

impl Default for RateLimits {
    fn default() -> Self {
        RateLimits {
            requests_per_minute: None,
            max_in_flight: default_max_in_flight(),
            retry_attempts: default_retry_attempts(),
            retry_base_ms: default_retry_base_ms(),
        }
    }
}

/// Full provider description as it appears in a run configuration.
/// Credentials are named by environment variable, never stored literally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub model_name: String,
    #[serde(default)]
    pub settings: RequestSettings,
    #[serde(default)]
    pub rate: RateLimits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credentials_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockSettings>,
}

impl ProviderConfig {
    pub fn mock_with(behavior: MockBehavior, model_name: &str) -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            model_name: model_name.to_string(),
            settings: RequestSettings::quiz_defaults(),
            rate: RateLimits::default(),
            credentials_env: None,
            base_url: None,
            mock: Some(MockSettings {
                behavior,
                latency_ms: 0,
            }),
        }
    }

    /// Target-model invariants: single-token greedy decoding, and a logit
    /// bias wherever the wire format supports one.
    pub fn validate_for_quiz(&self) -> Result<(), ProviderError> {
        if self.settings.max_tokens != Some(1) {
            return Err(ProviderError::Config(
                "quiz provider must use max_tokens = 1".into(),
            ));
        }
        if self.settings.temperature != Some(0.0) {
            return Err(ProviderError::Config(
                "quiz provider must use temperature = 0".into(),
            ));
        }
        if self.kind.supports_logit_bias() && self.settings.logit_bias.is_none() {
            return Err(ProviderError::Config(
                "quiz provider supports logit_bias but none is configured".into(),
            ));
        }
        Ok(())
    }
}

/// Paragraph metadata the mock model needs to plant its answer. HTTP
/// providers ignore this; it never enters the request fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestContext {
    pub paragraph_id: String,
    pub permutation_index: u8,
    pub answer_key: Choice,
    pub membership: MembershipLabel,
    pub access: AccessLabel,
}

/// One chat request: rendered prompts plus decoding settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system: Option<String>,
    pub user: String,
    pub settings: RequestSettings,
    pub context: Option<RequestContext>,
}

/// Stable hash of (provider kind, model, prompts, settings). Cache lookups
/// key on this, so identical requests never hit the network twice.
pub fn fingerprint(kind: ProviderKind, model: &str, request: &ChatRequest, salt: u32) -> String {
    #[derive(Serialize)]
    struct FingerprintInput<'a> {
        kind: &'a str,
        model: &'a str,
        system: &'a Option<String>,
        user: &'a str,
        settings: &'a RequestSettings,
        #[serde(skip_serializing_if = "Option::is_none")]
        salt: Option<u32>,
    }
    let canonical = serde_json::to_string(&FingerprintInput {
        kind: kind.label(),
        model,
        system: &request.system,
        user: &request.user,
        settings: &request.settings,
        salt: (salt != 0).then_some(salt),
    })
    .expect("fingerprint input serializes");
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// A single normalized completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub token: String,
    pub logprobs: Option<BTreeMap<Choice, f64>>,
}

/// Transport abstraction; implementations perform exactly one attempt.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest, fingerprint: &str) -> Result<Value, ProviderError>;
}

impl<T: ChatClient + ?Sized> ChatClient for Arc<T> {
    fn complete(&self, request: &ChatRequest, fingerprint: &str) -> Result<Value, ProviderError> {
        (**self).complete(request, fingerprint)
    }
}

/// Normalizes a completion token to one of the four option letters:
/// surrounding whitespace and punctuation are stripped and the remainder is
/// uppercased; anything but a single A-D is rejected.
pub fn parse_choice(token: &str) -> Result<Choice, ProviderError> {
    let cleaned: String = token
        .trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_uppercase();
    match cleaned.as_str() {
        "A" => Ok(Choice::A),
        "B" => Ok(Choice::B),
        "C" => Ok(Choice::C),
        "D" => Ok(Choice::D),
        _ => Err(ProviderError::UnparseableChoice {
            token: token.to_string(),
        }),
    }
}

/// Extracts the completion token (plus letter logprobs when present) from a
/// provider payload.
pub fn extract_completion(kind: ProviderKind, body: &Value) -> Result<Completion, ProviderError> {
    match kind {
        ProviderKind::OpenAiChat => http::extract_openai_completion(body),
        ProviderKind::AnthropicChat => http::extract_anthropic_completion(body),
        ProviderKind::Mock => mock::extract_mock_completion(body),
    }
}

/// Extracts long-form response text (paraphrase generations).
pub fn extract_text(kind: ProviderKind, body: &Value) -> Result<String, ProviderError> {
    match kind {
        ProviderKind::OpenAiChat => http::extract_openai_text(body),
        ProviderKind::AnthropicChat => http::extract_anthropic_text(body),
        ProviderKind::Mock => mock::extract_mock_text(body),
    }
}

/// Minimum-interval pacing shared by all workers of a provider.
struct Pacer {
    next_slot: Mutex<std::time::Instant>,
    interval: Duration,
}

impl Pacer {
    fn new(requests_per_minute: u32) -> Self {
        Pacer {
            next_slot: Mutex::new(std::time::Instant::now()),
            interval: Duration::from_secs_f64(60.0 / f64::from(requests_per_minute.max(1))),
        }
    }

    fn acquire(&self) {
        let wait = {
            let mut slot = self.next_slot.lock().expect("pacer lock");
            let now = std::time::Instant::now();
            let at = (*slot).max(now);
            *slot = at + self.interval;
            at.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// One quiz submission: the instance plus the document it renders against
/// and the labels the mock needs.
#[derive(Debug, Clone)]
pub struct QuizJob {
    pub instance: QuizInstance,
    pub doc: Arc<DocumentMeta>,
    pub membership: MembershipLabel,
    pub access: AccessLabel,
}

/// Per-item failure recorded by a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizFailure {
    pub quiz_id: String,
    pub paragraph_id: String,
    pub error: String,
}

pub type QuizOutcome = Result<QuizResult, QuizFailure>;

/// A configured provider with its response cache.
pub struct Provider {
    config: ProviderConfig,
    client: Box<dyn ChatClient>,
    cache: ResponseCache,
    pacer: Option<Pacer>,
    mock_stats: Option<Arc<MockStats>>,
}

impl Provider {
    /// Builds the client implied by the config. HTTP kinds read their API
    /// key from the configured environment variable now, so a missing
    /// credential aborts before any work is queued.
    pub fn new(config: ProviderConfig, cache_path: &std::path::Path) -> Result<Self, ProviderError> {
        let (client, mock_stats): (Box<dyn ChatClient>, Option<Arc<MockStats>>) = match config.kind
        {
            ProviderKind::Mock => {
                let settings = config.mock.clone().ok_or_else(|| {
                    ProviderError::Config("mock provider requires mock settings".into())
                })?;
                let client = Arc::new(MockClient::new(settings));
                let stats = client.stats();
                (Box::new(client), Some(stats))
            }
            kind => {
                let client = HttpClient::from_config(kind, &config)?;
                (Box::new(client), None)
            }
        };
        Self::assemble(config, client, mock_stats, cache_path)
    }

    /// Uses a caller-supplied client (shared mocks, fault injection).
    pub fn with_client(
        config: ProviderConfig,
        client: Box<dyn ChatClient>,
        cache_path: &std::path::Path,
    ) -> Result<Self, ProviderError> {
        Self::assemble(config, client, None, cache_path)
    }

    /// Like [`Provider::with_client`] but keeps the mock handle for
    /// instrumentation.
    pub fn with_mock(
        config: ProviderConfig,
        mock: Arc<MockClient>,
        cache_path: &std::path::Path,
    ) -> Result<Self, ProviderError> {
        let stats = mock.stats();
        Self::assemble(config, Box::new(mock), Some(stats), cache_path)
    }

    fn assemble(
        config: ProviderConfig,
        client: Box<dyn ChatClient>,
        mock_stats: Option<Arc<MockStats>>,
        cache_path: &std::path::Path,
    ) -> Result<Self, ProviderError> {
        let cache = ResponseCache::open(cache_path)
            .map_err(|e| ProviderError::Cache(e.to_string()))?;
        let pacer = config.rate.requests_per_minute.map(Pacer::new);
        Ok(Provider {
            config,
            client,
            cache,
            pacer,
            mock_stats,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn mock_stats(&self) -> Option<&Arc<MockStats>> {
        self.mock_stats.as_ref()
    }

    /// Cache-first completion with bounded retries and exponential backoff
    /// on transient failures. Successful bodies are appended to the cache
    /// (flushed per record) before being returned.
    pub fn complete_cached(
        &self,
        request: &ChatRequest,
        salt: u32,
    ) -> Result<(String, Value), ProviderError> {
        let fp = fingerprint(self.config.kind, &self.config.model_name, request, salt);
        if let Some(body) = self.cache.get(&fp) {
            return Ok((fp, body));
        }
        let mut attempt = 0u32;
        loop {
            if let Some(pacer) = &self.pacer {
                pacer.acquire();
            }
            match self.client.complete(request, &fp) {
                Ok(body) => {
                    self.cache
                        .append(&fp, self.config.kind, &self.config.model_name, &body)
                        .map_err(|e| ProviderError::Cache(e.to_string()))?;
                    return Ok((fp, body));
                }
                Err(e) if e.retryable() && attempt + 1 < self.config.rate.retry_attempts => {
                    let backoff = backoff_with_jitter(self.config.rate.retry_base_ms, attempt);
                    log::debug!("retrying after {e} (attempt {attempt}, backoff {backoff:?})");
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Renders and submits one quiz, parsing the single completion token
    /// into a choice.
    pub fn submit_quiz(&self, job: &QuizJob) -> Result<QuizResult, ProviderError> {
        let (system, user) = render_quiz_prompt(&job.instance, &job.doc);
        let request = ChatRequest {
            system: Some(system),
            user,
            settings: self.config.settings.clone(),
            context: Some(RequestContext {
                paragraph_id: job.instance.paragraph_id.clone(),
                permutation_index: job.instance.permutation_index,
                answer_key: job.instance.answer_key,
                membership: job.membership,
                access: job.access,
            }),
        };
        let (fp, body) = self.complete_cached(&request, 0)?;
        let completion = extract_completion(self.config.kind, &body)?;
        let chosen = parse_choice(&completion.token)?;
        Ok(QuizResult {
            quiz_id: job.instance.quiz_id.clone(),
            model_name: self.config.model_name.clone(),
            chosen,
            correct: chosen == job.instance.answer_key,
            logprobs: completion.logprobs,
            raw_response_id: fp,
        })
    }

    /// Requests one paraphrase generation; `attempt` salts the fingerprint
    /// so a retry is a fresh request rather than a cache hit.
    pub fn generate_paraphrase(
        &self,
        paragraph: &Paragraph,
        attempt: u32,
    ) -> Result<(String, String), ProviderError> {
        let request = ChatRequest {
            system: None,
            user: build_paraphrase_prompt(paragraph),
            settings: self.config.settings.clone(),
            context: None,
        };
        let (fp, body) = self.complete_cached(&request, attempt)?;
        let text = extract_text(self.config.kind, &body)?;
        Ok((fp, text))
    }

    /// Submits a batch with at most `max_in_flight` requests in flight.
    ///
    /// Per-item failures (transport errors after retries, unparseable
    /// tokens) are recorded in the outcome at the item's input position;
    /// only authentication/configuration failures or cancellation abort the
    /// whole batch. Completed responses land in the cache immediately, so an
    /// aborted batch resumes without re-requesting anything that succeeded.
    pub fn batch_submit(
        &self,
        jobs: &[QuizJob],
        cancel: Option<&AtomicBool>,
    ) -> Result<Vec<QuizOutcome>, ProviderError> {
        if jobs.is_empty() {
            return Ok(Vec::new());
        }
        let n_workers = self.config.rate.max_in_flight.clamp(1, jobs.len());
        let cursor = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<QuizOutcome>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
        let fatal: Mutex<Option<ProviderError>> = Mutex::new(None);
        let cancelled = AtomicBool::new(false);

        std::thread::scope(|scope| {
            for _ in 0..n_workers {
                scope.spawn(|| loop {
                    if cancelled.load(Ordering::SeqCst)
                        || fatal.lock().expect("fatal lock").is_some()
                    {
                        return;
                    }
                    if let Some(flag) = cancel {
                        if flag.load(Ordering::SeqCst) {
                            cancelled.store(true, Ordering::SeqCst);
                            return;
                        }
                    }
                    let index = cursor.fetch_add(1, Ordering::SeqCst);
                    if index >= jobs.len() {
                        return;
                    }
                    let job = &jobs[index];
                    let outcome = match self.submit_quiz(job) {
                        Ok(result) => Ok(result),
                        Err(e) if e.fatal_for_batch() => {
                            *fatal.lock().expect("fatal lock") = Some(e);
                            return;
                        }
                        Err(e) => Err(QuizFailure {
                            quiz_id: job.instance.quiz_id.clone(),
                            paragraph_id: job.instance.paragraph_id.clone(),
                            error: e.to_string(),
                        }),
                    };
                    *slots[index].lock().expect("slot lock") = Some(outcome);
                });
            }
        });

        if let Some(e) = fatal.into_inner().expect("fatal lock") {
            return Err(e);
        }
        if cancelled.load(Ordering::SeqCst) {
            return Err(ProviderError::Cancelled);
        }
        let outcomes: Vec<QuizOutcome> = slots
            .into_iter()
            .map(|slot| slot.into_inner().expect("slot lock").expect("all slots filled"))
            .collect();
        Ok(outcomes)
    }
}

fn backoff_with_jitter(base_ms: u64, attempt: u32) -> Duration {
    use rand::Rng;
    let backoff = base_ms.saturating_mul(1 << attempt.min(8));
    let jitter = rand::thread_rng().gen_range(0..=base_ms / 2 + 1);
    Duration::from_millis(backoff + jitter)
}
