//! OpenAI-compatible chat and embedding client with an on-disk exchange
//! cache, retries, and a cache-only replay mode.

mod cache;
mod gate;
mod transport;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::RenderedPrompt;
use crate::retrieval::normalize;

pub use cache::ExchangeCache;
pub use transport::{HttpReply, HttpTransport, Transport, TransportError};

use gate::Gate;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("HTTP {status} after {attempts} attempt(s): {body}")]
    Http { status: u16, body: String, attempts: u32 },
    #[error("{message} after {attempts} attempt(s)")]
    Transport { message: String, attempts: u32 },
    #[error("empty response")]
    EmptyResponse,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no replay fixture for request {key}")]
    ReplayMiss { key: String },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("nothing to embed")]
    EmptyInput,
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    /// Serves recorded exchanges from the cache directory; a miss is an error.
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: String,
    pub model_name: String,
    /// Model for `/embeddings`; dense retrieval needs it.
    pub embedding_model: Option<String>,
    /// Environment variable holding the bearer token. `None` sends no
    /// Authorization header.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_retries: u32,
    pub request_timeout_ms: u64,
    /// Delay before the first retry; doubled on every further retry.
    pub retry_base_delay_ms: u64,
    pub max_in_flight: usize,
    pub embed_batch_size: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Http,
            base_url: "https://api.openai.com/v1".into(),
            model_name: String::new(),
            embedding_model: None,
            api_key_env: Some("OPENAI_API_KEY".into()),
            temperature: 0.0,
            max_retries: 4,
            request_timeout_ms: 120_000,
            retry_base_delay_ms: 1_000,
            max_in_flight: 4,
            embed_batch_size: 32,
            cache_dir: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::InvalidConfig(m.into()));
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty");
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be a finite number >= 0");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.embed_batch_size == 0 {
            return bad("embed_batch_size must be at least 1");
        }
        match self.kind {
            ProviderKind::Replay if self.cache_dir.is_none() => bad("replay provider needs cache_dir"),
            ProviderKind::Http if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) => {
                bad("base_url must start with http:// or https://")
            }
            _ => Ok(()),
        }
    }

    /// Identifies the models behind cached results, independent of the
    /// endpoint URL and transport settings.
    pub fn fingerprint(&self) -> String {
        format!("{}@t={}|embed={}", self.model_name, self.temperature, self.embedding_model.as_deref().unwrap_or("-"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

impl ChatRequest {
    /// Hex sha256 of the canonical JSON request; the cache file stem.
    pub fn cache_key(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("request serializes")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    /// Raw completion text, unmodified.
    pub response_text: String,
    pub latency: Duration,
    pub token_usage: Option<TokenUsage>,
    pub cache_hit: bool,
    /// HTTP attempts made; 0 when served from the cache.
    pub attempts: u32,
}

/// On-disk form of a chat exchange, shared by the cache and replay fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedExchange {
    pub request: ChatRequest,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CachedEmbedding {
    model: String,
    text: String,
    vector: Vec<f64>,
}

fn embedding_key(model: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"embedding\0");
    h.update(model);
    h.update([0]);
    h.update(text);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingBatch {
    pub model: String,
    pub inputs: Vec<String>,
    /// Unit-normalized, one per input, uniform dimension.
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingBatch {
    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

pub struct Provider {
    config: ProviderConfig,
    transport: Option<Arc<dyn Transport>>,
    api_key: Option<String>,
    cache: Option<ExchangeCache>,
    gate: Gate,
    requests: AtomicUsize,
}

impl std::fmt::Debug for Provider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Provider")
            .field("config", &self.config)
            .field("requests", &self.requests)
            .finish_non_exhaustive()
    }
}

impl Provider {
    /// Builds the provider named by `config.kind`.
    pub fn from_config(config: ProviderConfig) -> Result<Self, ProviderError> {
        match config.kind {
            ProviderKind::Http => Self::with_transport(config, Arc::new(HttpTransport::new())),
            ProviderKind::Replay => {
                config.validate()?;
                Ok(Self::assemble(config, None, None))
            }
        }
    }

    pub fn with_transport(config: ProviderConfig, transport: Arc<dyn Transport>) -> Result<Self, ProviderError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ProviderError::MissingApiKey(var.clone()))?),
            None => None,
        };
        Ok(Self::assemble(config, Some(transport), api_key))
    }

    fn assemble(config: ProviderConfig, transport: Option<Arc<dyn Transport>>, api_key: Option<String>) -> Self {
        Self {
            cache: config.cache_dir.clone().map(ExchangeCache::new),
            gate: Gate::new(config.max_in_flight),
            requests: AtomicUsize::new(0),
            config,
            transport,
            api_key,
        }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// HTTP requests issued so far, retries included.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn request_for(&self, prompt: &RenderedPrompt) -> ChatRequest {
        ChatRequest {
            model: self.config.model_name.clone(),
            temperature: self.config.temperature,
            system: prompt.system.clone(),
            user: prompt.user.clone(),
        }
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<ChatExchange, ProviderError> {
        let request = self.request_for(prompt);
        let key = request.cache_key();
        let started = Instant::now();
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get::<CachedExchange>(&key)? {
                if hit.request == request {
                    return Ok(ChatExchange {
                        request,
                        response_text: hit.response_text,
                        latency: started.elapsed(),
                        token_usage: hit.token_usage,
                        cache_hit: true,
                        attempts: 0,
                    });
                }
                warn!("cache entry {key} holds a different request; ignoring it");
            }
        }
        let Some(transport) = &self.transport else {
            return Err(ProviderError::ReplayMiss { key });
        };
        let body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
        });
        debug!("chat request {key}: {} prompt bytes", prompt.total_len());
        let (reply, attempts) = self.post_with_retries(transport.as_ref(), "chat/completions", &body)?;
        let (response_text, token_usage) = parse_chat(&reply.body)?;
        if let Some(cache) = &self.cache {
            cache.put(
                &key,
                &CachedExchange { request: request.clone(), response_text: response_text.clone(), token_usage },
            )?;
        }
        Ok(ChatExchange { request, response_text, latency: started.elapsed(), token_usage, cache_hit: false, attempts })
    }

    /// Embeds `texts`, deduplicating, consulting the cache per text, and
    /// sending the rest in chunks of `embed_batch_size`.
    pub fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let model = self
            .config
            .embedding_model
            .clone()
            .ok_or_else(|| ProviderError::InvalidConfig("embedding_model is not set".into()))?;
        let mut known: HashMap<&str, Vec<f64>> = HashMap::new();
        let mut missing: Vec<&str> = Vec::new();
        for t in texts {
            if known.contains_key(t.as_str()) || missing.contains(&t.as_str()) {
                continue;
            }
            let cached = match &self.cache {
                Some(c) => c.get::<CachedEmbedding>(&embedding_key(&model, t))?,
                None => None,
            };
            match cached {
                Some(e) if e.model == model && e.text == *t => {
                    known.insert(t, e.vector);
                }
                _ => missing.push(t),
            }
        }
        if !missing.is_empty() {
            let Some(transport) = &self.transport else {
                return Err(ProviderError::ReplayMiss { key: embedding_key(&model, missing[0]) });
            };
            for chunk in missing.chunks(self.config.embed_batch_size) {
                let body = json!({"model": model, "input": chunk});
                let (reply, _) = self.post_with_retries(transport.as_ref(), "embeddings", &body)?;
                let vectors = parse_embeddings(&reply.body, chunk.len())?;
                for (text, v) in chunk.iter().zip(vectors) {
                    let v = normalize(&v);
                    if let Some(c) = &self.cache {
                        c.put(
                            &embedding_key(&model, text),
                            &CachedEmbedding { model: model.clone(), text: text.to_string(), vector: v.clone() },
                        )?;
                    }
                    known.insert(text, v);
                }
            }
        }
        let vectors: Vec<Vec<f64>> = texts.iter().map(|t| known[t.as_str()].clone()).collect();
        let dim = vectors[0].len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(ProviderError::DimensionMismatch { expected: dim, found: v.len() });
        }
        Ok(EmbeddingBatch { model, inputs: texts.to_vec(), vectors })
    }

    fn post_with_retries(
        &self,
        transport: &dyn Transport,
        endpoint: &str,
        body: &Value,
    ) -> Result<(HttpReply, u32), ProviderError> {
        let url = format!("{}/{endpoint}", self.config.base_url.trim_end_matches('/'));
        let timeout = Duration::from_millis(self.config.request_timeout_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let outcome = {
                let _permit = self.gate.acquire();
                self.requests.fetch_add(1, Ordering::SeqCst);
                transport.post_json(&url, self.api_key.as_deref(), body, timeout)
            };
            let err = match outcome {
                Ok(r) if (200..300).contains(&r.status) => return Ok((r, attempts)),
                Ok(r) => {
                    let retryable = r.status == 429 || r.status >= 500;
                    let err = ProviderError::Http { status: r.status, body: r.body, attempts };
                    if !retryable {
                        return Err(err);
                    }
                    err
                }
                Err(e) => ProviderError::Transport { message: e.to_string(), attempts },
            };
            if attempts > self.config.max_retries {
                return Err(err);
            }
            let delay = self.config.retry_base_delay_ms.saturating_mul(1 << (attempts - 1).min(16));
            warn!("{endpoint} attempt {attempts} failed ({err}); retrying in {delay} ms");
            std::thread::sleep(Duration::from_millis(delay));
        }
    }
}

fn parse_chat(body: &str) -> Result<(String, Option<TokenUsage>), ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))?;
    if text.trim().is_empty() {
        return Err(ProviderError::EmptyResponse);
    }
    let usage = v.get("usage").and_then(|u| {
        Some(TokenUsage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok((text.to_string(), usage))
}

fn parse_embeddings(body: &str, expected: usize) -> Result<Vec<Vec<f64>>, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
    let data =
        v.get("data").and_then(Value::as_array).ok_or_else(|| ProviderError::Malformed("missing data array".into()))?;
    if data.len() != expected {
        return Err(ProviderError::Malformed(format!("{} embeddings for {expected} inputs", data.len())));
    }
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(expected);
    for (i, item) in data.iter().enumerate() {
        let index = item.get("index").and_then(Value::as_u64).map_or(i, |x| x as usize);
        let vector = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Malformed(format!("data[{i}] has no embedding")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| ProviderError::Malformed(format!("data[{i}] has a non-numeric entry"))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((index, vector));
    }
    rows.sort_by_key(|r| r.0);
    let dim = rows[0].1.len();
    for (_, r) in &rows {
        if r.len() != dim {
            return Err(ProviderError::DimensionMismatch { expected: dim, found: r.len() });
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
