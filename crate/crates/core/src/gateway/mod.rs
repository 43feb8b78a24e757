//! Uniform access to a chat-completion backend and a text-embedding backend.
//!
//! The gateway wraps a [`ChatBackend`] and an [`EmbeddingBackend`] with
//! retries, exponential backoff, a global concurrent-request cap, and
//! per-stage call counters. The mock backends make every pipeline stage
//! reproducible bit-for-bit offline.

mod live;
mod mock;
mod template;

pub use live::{LiveChatBackend, LiveEmbeddingBackend};
pub use mock::{HashEmbeddingBackend, MockChatBackend};
pub use template::{FewShotExample, PromptTemplate};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    /// Pipeline stage issuing the call (e.g. "extract", "qa", "answer").
    pub stage: String,
    /// Stable label of the input within the stage; `{stage}::{input_key}`
    /// is the mock script lookup key.
    pub input_key: String,
    pub system: String,
    pub user: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub model_tag: String,
}

impl ChatRequest {
    pub fn new(
        stage: impl Into<String>,
        input_key: impl Into<String>,
        system: impl Into<String>,
        user: impl Into<String>,
    ) -> ChatRequest {
        ChatRequest {
            stage: stage.into(),
            input_key: input_key.into(),
            system: system.into(),
            user: user.into(),
            // 0 = fill from the gateway's configured default.
            max_tokens: 0,
            temperature: 0.0,
            model_tag: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(Error::InvalidInput("max_tokens must be positive".into()));
        }
        if self.temperature < 0.0 {
            return Err(Error::InvalidInput("temperature must be >= 0".into()));
        }
        Ok(())
    }

    /// Mock script lookup key.
    pub fn script_key(&self) -> String {
        format!("{}::{}", self.stage, self.input_key)
    }
}

/// What a chat backend returns for one successful call.
#[derive(Debug, Clone)]
pub struct ChatReply {
    pub text: String,
    /// True when the backend stopped at the max_tokens cap.
    pub truncated: bool,
}

/// Completion plus gateway bookkeeping.
#[derive(Debug, Clone)]
pub struct ChatOutcome {
    pub text: String,
    pub truncated: bool,
    /// Transient failures absorbed before this call succeeded.
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub dim: usize,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> EmbeddingVector {
        let dim = values.len();
        EmbeddingVector { values, dim }
    }
}

pub trait ChatBackend: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply>;
}

pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Mock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub backend: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_chat_model")]
    pub chat_model: String,
    /// Model used for QA answering; defaults to chat_model.
    #[serde(default)]
    pub answer_model: Option<String>,
    #[serde(default = "default_embed_model")]
    pub embed_model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    #[serde(default = "default_retry_max_ms")]
    pub retry_max_ms: u64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub mock_script: Option<PathBuf>,
    #[serde(default = "default_mock_embed_dim")]
    pub mock_embed_dim: usize,
}

fn default_chat_model() -> String {
    "gpt-4o-mini".into()
}
fn default_embed_model() -> String {
    "paraphrase-minilm-l6-v2".into()
}
fn default_api_key_env() -> String {
    "ASPECTSUM_API_KEY".into()
}
fn default_concurrency() -> usize {
    4
}
fn default_max_retries() -> u32 {
    5
}
fn default_retry_base_ms() -> u64 {
    250
}
fn default_retry_max_ms() -> u64 {
    8_000
}
fn default_max_tokens() -> u32 {
    1024
}
fn default_mock_embed_dim() -> usize {
    32
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            backend: BackendKind::Mock,
            base_url: None,
            chat_model: default_chat_model(),
            answer_model: None,
            embed_model: default_embed_model(),
            api_key_env: default_api_key_env(),
            concurrency: default_concurrency(),
            max_retries: default_max_retries(),
            retry_base_ms: default_retry_base_ms(),
            retry_max_ms: default_retry_max_ms(),
            max_tokens: default_max_tokens(),
            mock_script: None,
            mock_embed_dim: default_mock_embed_dim(),
        }
    }
}

/// Counting semaphore capping in-flight backend calls.
struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { sem: self }
    }
}

struct SemaphoreGuard<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.sem.permits.lock().unwrap() += 1;
        self.sem.cv.notify_one();
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageStats {
    pub chat_calls: u64,
    pub embed_calls: u64,
    pub embed_texts: u64,
    pub retries: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GatewayStats {
    pub per_stage: BTreeMap<String, StageStats>,
}

impl GatewayStats {
    pub fn stage(&self, name: &str) -> StageStats {
        self.per_stage.get(name).copied().unwrap_or_default()
    }

    pub fn total_chat_calls(&self) -> u64 {
        self.per_stage.values().map(|s| s.chat_calls).sum()
    }

    pub fn total_embed_calls(&self) -> u64 {
        self.per_stage.values().map(|s| s.embed_calls).sum()
    }

    pub fn total_retries(&self) -> u64 {
        self.per_stage.values().map(|s| s.retries).sum()
    }
}

pub struct Gateway {
    chat_backend: Arc<dyn ChatBackend>,
    embed_backend: Arc<dyn EmbeddingBackend>,
    max_retries: u32,
    retry_base: Duration,
    retry_max: Duration,
    default_max_tokens: u32,
    default_model_tag: String,
    concurrency: usize,
    semaphore: Semaphore,
    stats: Mutex<GatewayStats>,
}

impl Gateway {
    pub fn new(
        chat_backend: Arc<dyn ChatBackend>,
        embed_backend: Arc<dyn EmbeddingBackend>,
        concurrency: usize,
        max_retries: u32,
    ) -> Gateway {
        Gateway {
            chat_backend,
            embed_backend,
            max_retries,
            retry_base: Duration::from_millis(default_retry_base_ms()),
            retry_max: Duration::from_millis(default_retry_max_ms()),
            default_max_tokens: default_max_tokens(),
            default_model_tag: default_chat_model(),
            concurrency: concurrency.max(1),
            semaphore: Semaphore::new(concurrency),
            stats: Mutex::new(GatewayStats::default()),
        }
    }

    /// The configured concurrent-request cap; also a sensible worker count
    /// for callers fanning out over it.
    pub fn concurrency(&self) -> usize {
        self.concurrency
    }

    pub fn with_retry_delays(mut self, base: Duration, max: Duration) -> Gateway {
        self.retry_base = base;
        self.retry_max = max;
        self
    }

    pub fn from_config(cfg: &GatewayConfig) -> Result<Gateway> {
        let (chat_backend, embed_backend): (Arc<dyn ChatBackend>, Arc<dyn EmbeddingBackend>) =
            match cfg.backend {
                BackendKind::Mock => {
                    let script = match &cfg.mock_script {
                        Some(path) => MockChatBackend::from_file(path)?,
                        None => MockChatBackend::new(BTreeMap::new()),
                    };
                    (
                        Arc::new(script),
                        Arc::new(HashEmbeddingBackend::new(cfg.mock_embed_dim)),
                    )
                }
                BackendKind::Live => {
                    let base_url = cfg.base_url.clone().ok_or_else(|| {
                        Error::Config("gateway.base_url is required for the live backend".into())
                    })?;
                    let api_key = std::env::var(&cfg.api_key_env).map_err(|_| {
                        Error::Config(format!(
                            "API key env var {:?} is not set",
                            cfg.api_key_env
                        ))
                    })?;
                    (
                        Arc::new(LiveChatBackend::new(
                            base_url.clone(),
                            api_key.clone(),
                            cfg.chat_model.clone(),
                        )?),
                        Arc::new(LiveEmbeddingBackend::new(
                            base_url,
                            api_key,
                            cfg.embed_model.clone(),
                        )?),
                    )
                }
            };
        Ok(Gateway {
            chat_backend,
            embed_backend,
            max_retries: cfg.max_retries,
            retry_base: Duration::from_millis(cfg.retry_base_ms),
            retry_max: Duration::from_millis(cfg.retry_max_ms),
            default_max_tokens: cfg.max_tokens,
            default_model_tag: cfg.chat_model.clone(),
            concurrency: cfg.concurrency.max(1),
            semaphore: Semaphore::new(cfg.concurrency),
            stats: Mutex::new(GatewayStats::default()),
        })
    }

    /// Issue a chat call, retrying transient failures with exponential
    /// backoff up to the configured limit.
    pub fn chat(&self, req: &ChatRequest) -> Result<ChatOutcome> {
        let mut req = req.clone();
        if req.model_tag.is_empty() {
            req.model_tag = self.default_model_tag.clone();
        }
        if req.max_tokens == 0 {
            req.max_tokens = self.default_max_tokens;
        }
        req.validate()?;

        {
            let mut stats = self.stats.lock().unwrap();
            stats.per_stage.entry(req.stage.clone()).or_default().chat_calls += 1;
        }

        let _permit = self.semaphore.acquire();
        let mut retries = 0u32;
        loop {
            match self.chat_backend.chat(&req) {
                Ok(reply) => {
                    return Ok(ChatOutcome {
                        text: reply.text,
                        truncated: reply.truncated,
                        retries,
                    })
                }
                Err(err) if err.is_transient() && retries < self.max_retries => {
                    retries += 1;
                    {
                        let mut stats = self.stats.lock().unwrap();
                        stats.per_stage.entry(req.stage.clone()).or_default().retries += 1;
                    }
                    std::thread::sleep(self.backoff(retries));
                }
                Err(err) if err.is_transient() => {
                    return Err(Error::RetriesExhausted {
                        attempts: retries + 1,
                        last: Box::new(err),
                    })
                }
                Err(err) => return Err(err),
            }
        }
    }

    /// Embed a batch of texts, order-preserving. Validation happens before
    /// any backend call.
    pub fn embed(&self, stage: &str, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        if texts.is_empty() {
            return Err(Error::InvalidInput("embedding batch is empty".into()));
        }
        if let Some(pos) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(Error::InvalidInput(format!(
                "embedding batch contains an empty text at position {pos}"
            )));
        }
        {
            let mut stats = self.stats.lock().unwrap();
            let entry = stats.per_stage.entry(stage.to_string()).or_default();
            entry.embed_calls += 1;
            entry.embed_texts += texts.len() as u64;
        }
        let _permit = self.semaphore.acquire();
        let mut retries = 0u32;
        loop {
            match self.embed_backend.embed(texts) {
                Ok(vectors) => {
                    debug_assert_eq!(vectors.len(), texts.len());
                    return Ok(vectors);
                }
                Err(err) if err.is_transient() && retries < self.max_retries => {
                    retries += 1;
                    {
                        let mut stats = self.stats.lock().unwrap();
                        stats.per_stage.entry(stage.to_string()).or_default().retries += 1;
                    }
                    std::thread::sleep(self.backoff(retries));
                }
                Err(err) if err.is_transient() => {
                    return Err(Error::RetriesExhausted {
                        attempts: retries + 1,
                        last: Box::new(err),
                    })
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        let millis = (self.retry_base.as_millis() as u64)
            .saturating_mul(factor)
            .min(self.retry_max.as_millis() as u64);
        Duration::from_millis(millis)
    }

    pub fn stats(&self) -> GatewayStats {
        self.stats.lock().unwrap().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct FlakyBackend {
        failures_before_success: AtomicUsize,
    }

    impl ChatBackend for FlakyBackend {
        fn chat(&self, _req: &ChatRequest) -> Result<ChatReply> {
            let left = self.failures_before_success.load(Ordering::SeqCst);
            if left > 0 {
                self.failures_before_success.store(left - 1, Ordering::SeqCst);
                return Err(Error::Backend {
                    status: Some(429),
                    message: "rate limited".into(),
                    transient: true,
                });
            }
            Ok(ChatReply {
                text: "ok".into(),
                truncated: false,
            })
        }
    }

    struct SlowBackend {
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    impl ChatBackend for SlowBackend {
        fn chat(&self, _req: &ChatRequest) -> Result<ChatReply> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(10));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(ChatReply {
                text: "done".into(),
                truncated: false,
            })
        }
    }

    fn hash_embed() -> Arc<dyn EmbeddingBackend> {
        Arc::new(HashEmbeddingBackend::new(8))
    }

    #[test]
    fn retries_then_succeeds() {
        let backend = Arc::new(FlakyBackend {
            failures_before_success: AtomicUsize::new(2),
        });
        let gw = Gateway::new(backend, hash_embed(), 2, 5)
            .with_retry_delays(Duration::from_millis(1), Duration::from_millis(2));
        let out = gw
            .chat(&ChatRequest::new("t", "k", "sys", "user"))
            .unwrap();
        assert_eq!(out.text, "ok");
        assert_eq!(out.retries, 2);
        assert_eq!(gw.stats().stage("t").retries, 2);
        assert_eq!(gw.stats().stage("t").chat_calls, 1);
    }

    #[test]
    fn exhausted_retries_carry_last_status() {
        let backend = Arc::new(FlakyBackend {
            failures_before_success: AtomicUsize::new(100),
        });
        let gw = Gateway::new(backend, hash_embed(), 2, 3)
            .with_retry_delays(Duration::from_millis(1), Duration::from_millis(1));
        let err = gw
            .chat(&ChatRequest::new("t", "k", "sys", "user"))
            .unwrap_err();
        match err {
            Error::RetriesExhausted { attempts, last } => {
                assert_eq!(attempts, 4);
                assert!(matches!(*last, Error::Backend { status: Some(429), .. }));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn concurrency_cap_is_respected() {
        let backend = Arc::new(SlowBackend {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let gw = Gateway::new(backend.clone(), hash_embed(), 3, 0);
        std::thread::scope(|scope| {
            for i in 0..16 {
                let gw = &gw;
                scope.spawn(move || {
                    gw.chat(&ChatRequest::new("t", format!("k{i}"), "s", "u"))
                        .unwrap();
                });
            }
        });
        assert!(backend.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(gw.stats().stage("t").chat_calls, 16);
    }

    #[test]
    fn embed_validates_before_calling() {
        let gw = Gateway::new(
            Arc::new(MockChatBackend::new(BTreeMap::new())),
            hash_embed(),
            1,
            0,
        );
        assert!(gw.embed("t", &[]).is_err());
        let err = gw.embed("t", &["ok".into(), "  ".into()]).unwrap_err();
        assert!(err.to_string().contains("position 1"));
        // Nothing was counted for the rejected batches.
        assert_eq!(gw.stats().stage("t").embed_calls, 0);
    }

    #[test]
    fn embed_is_order_and_length_preserving() {
        let gw = Gateway::new(
            Arc::new(MockChatBackend::new(BTreeMap::new())),
            hash_embed(),
            1,
            0,
        );
        let texts: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let vectors = gw.embed("t", &texts).unwrap();
        assert_eq!(vectors.len(), 3);
        assert!(vectors.iter().all(|v| v.dim == vectors[0].dim));
        let again = gw.embed("t", &texts).unwrap();
        assert_eq!(vectors, again);
    }
}
