//! HTTP backends speaking the de-facto chat-completions and embeddings
//! JSON shapes. Model identity is a config string; the base URL selects the
//! deployment.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::{ChatBackend, ChatReply, ChatRequest, EmbeddingBackend, EmbeddingVector};

fn build_client() -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .map_err(|e| Error::Backend {
            status: None,
            message: format!("failed to build HTTP client: {e}"),
            transient: false,
        })
}

fn transport_error(e: reqwest::Error) -> Error {
    Error::Backend {
        status: None,
        message: format!("transport error: {e}"),
        // Connection resets and timeouts are worth retrying.
        transient: e.is_timeout() || e.is_connect() || e.is_request(),
    }
}

fn is_retryable_status(status: u16) -> bool {
    matches!(status, 408 | 429 | 500 | 502 | 503 | 504)
}

fn check_status(status: u16, body: &str) -> Result<()> {
    if (200..300).contains(&status) {
        return Ok(());
    }
    Err(Error::Backend {
        status: Some(status),
        message: body.chars().take(500).collect(),
        transient: is_retryable_status(status),
    })
}

#[derive(Deserialize)]
struct ChatCompletionResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

pub struct LiveChatBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    default_model: String,
}

impl LiveChatBackend {
    pub fn new(base_url: String, api_key: String, default_model: String) -> Result<LiveChatBackend> {
        Ok(LiveChatBackend {
            client: build_client()?,
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
            default_model,
        })
    }
}

impl ChatBackend for LiveChatBackend {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply> {
        let model = if req.model_tag.is_empty() {
            &self.default_model
        } else {
            &req.model_tag
        };
        let body = json!({
            "model": model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        });
        let response = self
            .client
            .post(&self.url)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .json(&body)
            .send()
            .map_err(transport_error)?;
        let status = response.status().as_u16();
        let text = response.text().map_err(transport_error)?;
        check_status(status, &text)?;
        let parsed: ChatCompletionResponse =
            serde_json::from_str(&text).map_err(|e| Error::Backend {
                status: Some(status),
                message: format!("unexpected chat response shape: {e}"),
                transient: false,
            })?;
        let choice = parsed.choices.into_iter().next().ok_or(Error::Backend {
            status: Some(status),
            message: "chat response contained no choices".into(),
            transient: false,
        })?;
        Ok(ChatReply {
            truncated: choice.finish_reason.as_deref() == Some("length"),
            text: choice.message.content,
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

pub struct LiveEmbeddingBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    model: String,
}

impl LiveEmbeddingBackend {
    pub fn new(base_url: String, api_key: String, model: String) -> Result<LiveEmbeddingBackend> {
        Ok(LiveEmbeddingBackend {
            client: build_client()?,
            url: format!("{}/embeddings", base_url.trim_end_matches('/')),
            api_key,
            model,
        })
    }
}

impl EmbeddingBackend for LiveEmbeddingBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let body = json!({ "model": self.model, "input": texts });
        let response = self
            .client
            .post(&self.url)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .json(&body)
            .send()
            .map_err(transport_error)?;
        let status = response.status().as_u16();
        let text = response.text().map_err(transport_error)?;
        check_status(status, &text)?;
        let parsed: EmbeddingResponse =
            serde_json::from_str(&text).map_err(|e| Error::Backend {
                status: Some(status),
                message: format!("unexpected embedding response shape: {e}"),
                transient: false,
            })?;
        if parsed.data.len() != texts.len() {
            return Err(Error::Backend {
                status: Some(status),
                message: format!(
                    "embedding count mismatch: sent {}, received {}",
                    texts.len(),
                    parsed.data.len()
                ),
                transient: false,
            });
        }
        let mut data = parsed.data;
        data.sort_by_key(|d| d.index);
        Ok(data
            .into_iter()
            .map(|d| EmbeddingVector::new(d.embedding))
            .collect())
    }
}
