//! HTTP chat-completion transports.
//!
//! Request-settings serialization per provider:
//!
//! * `openai-chat`: POST `{base}/chat/completions` with bearer auth; body
//!   carries `model`, a system+user `messages` array, and whichever of
//!   `max_tokens`, `temperature`, `seed`, `logprobs`, `top_logprobs`,
//!   `logit_bias` are set.
//! * `anthropic-chat`: POST `{base}/messages` with `x-api-key` and
//!   `anthropic-version` headers; body carries `model`, optional `system`,
//!   a user `messages` array, `max_tokens` (mandatory on this wire format,
//!   defaulted to 1024 when unset), and `temperature`. Seed, logit bias, and
//!   logprobs are not supported and are dropped.

use serde_json::{json, Map, Value};

use super::{ChatClient, ChatRequest, Completion, ProviderConfig, ProviderError, ProviderKind};
use crate::provider::parse_choice;

pub const OPENAI_DEFAULT_BASE: &str = "https://api.openai.com/v1";
pub const ANTHROPIC_DEFAULT_BASE: &str = "https://api.anthropic.com/v1";
pub const ANTHROPIC_VERSION: &str = "2023-06-01";

/// A prepared HTTP request: URL, header pairs, JSON body.
#[derive(Debug, Clone, PartialEq)]
pub struct WireRequest {
    pub url: String,
    pub headers: Vec<(&'static str, String)>,
    pub body: Value,
}

pub fn build_openai_request(
    model: &str,
    base_url: Option<&str>,
    api_key: &str,
    request: &ChatRequest,
) -> WireRequest {
    let mut messages = Vec::new();
    if let Some(system) = &request.system {
        messages.push(json!({"role": "system", "content": system}));
    }
    messages.push(json!({"role": "user", "content": request.user}));

    let mut body = Map::new();
    body.insert("model".into(), json!(model));
    body.insert("messages".into(), json!(messages));
    let s = &request.settings;
    if let Some(v) = s.max_tokens {
        body.insert("max_tokens".into(), json!(v));
    }
    if let Some(v) = s.temperature {
        body.insert("temperature".into(), json!(v));
    }
    if let Some(v) = s.seed {
        body.insert("seed".into(), json!(v));
    }
    if let Some(v) = s.logprobs {
        body.insert("logprobs".into(), json!(v));
    }
    if let Some(v) = s.top_logprobs {
        body.insert("top_logprobs".into(), json!(v));
    }
    if let Some(v) = &s.logit_bias {
        body.insert("logit_bias".into(), json!(v));
    }
    WireRequest {
        url: format!("{}/chat/completions", base_url.unwrap_or(OPENAI_DEFAULT_BASE)),
        headers: vec![("authorization", format!("Bearer {api_key}"))],
        body: Value::Object(body),
    }
}

pub fn build_anthropic_request(
    model: &str,
    base_url: Option<&str>,
    api_key: &str,
    request: &ChatRequest,
) -> WireRequest {
    let mut body = Map::new();
    body.insert("model".into(), json!(model));
    if let Some(system) = &request.system {
        body.insert("system".into(), json!(system));
    }
    body.insert(
        "messages".into(),
        json!([{"role": "user", "content": request.user}]),
    );
    body.insert(
        "max_tokens".into(),
        json!(request.settings.max_tokens.unwrap_or(1024)),
    );
    if let Some(v) = request.settings.temperature {
        body.insert("temperature".into(), json!(v));
    }
    WireRequest {
        url: format!("{}/messages", base_url.unwrap_or(ANTHROPIC_DEFAULT_BASE)),
        headers: vec![
            ("x-api-key", api_key.to_string()),
            ("anthropic-version", ANTHROPIC_VERSION.to_string()),
        ],
        body: Value::Object(body),
    }
}

fn missing(field: &str) -> ProviderError {
    ProviderError::MalformedResponse(format!("missing field {field}"))
}

pub fn extract_openai_text(body: &Value) -> Result<String, ProviderError> {
    body["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| missing("choices[0].message.content"))
}

pub fn extract_openai_completion(body: &Value) -> Result<Completion, ProviderError> {
    let token = extract_openai_text(body)?;
    let mut logprobs = None;
    if let Some(top) = body["choices"][0]["logprobs"]["content"][0]["top_logprobs"].as_array() {
        let mut map = std::collections::BTreeMap::new();
        for entry in top {
            let (Some(tok), Some(lp)) = (entry["token"].as_str(), entry["logprob"].as_f64())
            else {
                continue;
            };
            if let Ok(choice) = parse_choice(tok) {
                // tokens like "A" and " A" normalize to the same letter;
                // keep the most probable
                let slot = map.entry(choice).or_insert(f64::NEG_INFINITY);
                if lp > *slot {
                    *slot = lp;
                }
            }
        }
        if !map.is_empty() {
            logprobs = Some(map);
        }
    }
    Ok(Completion { token, logprobs })
}

pub fn extract_anthropic_text(body: &Value) -> Result<String, ProviderError> {
    body["content"][0]["text"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| missing("content[0].text"))
}

pub fn extract_anthropic_completion(body: &Value) -> Result<Completion, ProviderError> {
    Ok(Completion {
        token: extract_anthropic_text(body)?,
        logprobs: None,
    })
}

/// Blocking HTTP transport for the two chat wire formats.
pub struct HttpClient {
    kind: ProviderKind,
    model: String,
    base_url: Option<String>,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    /// Reads the API key from the environment variable named in the config.
    pub fn from_config(kind: ProviderKind, config: &ProviderConfig) -> Result<Self, ProviderError> {
        let env_name = config.credentials_env.as_deref().ok_or_else(|| {
            ProviderError::Config(format!(
                "provider kind {} requires credentials_env",
                kind.label()
            ))
        })?;
        let api_key = std::env::var(env_name).map_err(|_| {
            ProviderError::Auth(format!("environment variable {env_name} is not set"))
        })?;
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(HttpClient {
            kind,
            model: config.model_name.clone(),
            base_url: config.base_url.clone(),
            api_key,
            http,
        })
    }

    fn wire_request(&self, request: &ChatRequest) -> WireRequest {
        match self.kind {
            ProviderKind::OpenAiChat => {
                build_openai_request(&self.model, self.base_url.as_deref(), &self.api_key, request)
            }
            ProviderKind::AnthropicChat => build_anthropic_request(
                &self.model,
                self.base_url.as_deref(),
                &self.api_key,
                request,
            ),
            ProviderKind::Mock => unreachable!("mock kind never builds HTTP requests"),
        }
    }
}

impl ChatClient for HttpClient {
    fn complete(&self, request: &ChatRequest, _fingerprint: &str) -> Result<Value, ProviderError> {
        let wire = self.wire_request(request);
        let mut builder = self.http.post(&wire.url).json(&wire.body);
        for (name, value) in &wire.headers {
            builder = builder.header(*name, value);
        }
        let response = builder
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| ProviderError::MalformedResponse(e.to_string())),
            401 | 403 => Err(ProviderError::Auth(format!("HTTP {status}: {text}"))),
            429 => Err(ProviderError::RateLimited),
            _ => Err(ProviderError::Http {
                status,
                message: text.chars().take(500).collect(),
            }),
        }
    }
}
