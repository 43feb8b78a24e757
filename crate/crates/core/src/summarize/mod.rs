//! Baseline aspect-based summary generators: hierarchical merging,
//! incremental updating, and NaiveRAG. Each produces a summary within the
//! configured token budget for one (book, aspect).

mod hier;
mod incremental;
mod naive_rag;
mod tokens;

pub use hier::summarize_hier;
pub use incremental::summarize_inc;
pub use naive_rag::{summarize_naiverag, RagIndex};
pub use tokens::{count_tokens, token_chunks, truncate_tokens, TokenizerKind};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Book;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway};
use crate::prompts;

pub const METHOD_HIER: &str = "hier";
pub const METHOD_INC: &str = "inc";
pub const METHOD_NAIVERAG: &str = "naiverag";
pub const ALL_METHODS: [&str; 3] = [METHOD_HIER, METHOD_INC, METHOD_NAIVERAG];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub book_id: String,
    /// Aspect name, or "GENERIC" for the aspect-free mode.
    pub aspect: String,
    pub method: String,
    pub text: String,
    /// Under the configured tokenizer; never exceeds the budget.
    pub token_count: usize,
    pub config_digest: String,
    /// Set when the budget had to be enforced by hard truncation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummarizerConfig {
    #[serde(default = "default_token_chunk_size")]
    pub token_chunk_size: usize,
    #[serde(default = "default_summary_budget")]
    pub summary_budget: usize,
    /// NaiveRAG: number of chunks retrieved per query.
    #[serde(default = "default_retrieval_k")]
    pub retrieval_k: usize,
    /// Token capacity of one hierarchical merge call.
    #[serde(default = "default_merge_batch_budget")]
    pub merge_batch_budget: usize,
    #[serde(default)]
    pub tokenizer: TokenizerKind,
}

fn default_token_chunk_size() -> usize {
    2048
}
fn default_summary_budget() -> usize {
    300
}
fn default_retrieval_k() -> usize {
    10
}
fn default_merge_batch_budget() -> usize {
    2048
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        SummarizerConfig {
            token_chunk_size: default_token_chunk_size(),
            summary_budget: default_summary_budget(),
            retrieval_k: default_retrieval_k(),
            merge_batch_budget: default_merge_batch_budget(),
            tokenizer: TokenizerKind::default(),
        }
    }
}

impl SummarizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.token_chunk_size == 0
            || self.summary_budget == 0
            || self.retrieval_k == 0
            || self.merge_batch_budget == 0
        {
            return Err(Error::Config(
                "summarizer sizes must all be positive".into(),
            ));
        }
        if self.summary_budget >= self.token_chunk_size {
            return Err(Error::Config(format!(
                "summary_budget ({}) must be smaller than token_chunk_size ({})",
                self.summary_budget, self.token_chunk_size
            )));
        }
        Ok(())
    }

    pub fn count(&self, text: &str) -> usize {
        count_tokens(text, self.tokenizer)
    }
}

/// Final budget enforcement shared by all methods: one compression call if
/// over budget, then hard truncation at a token boundary with the truncated
/// flag set.
pub(crate) fn enforce_budget(
    text: String,
    book: &Book,
    aspect: &str,
    method: &str,
    cfg: &SummarizerConfig,
    gateway: &Gateway,
) -> Result<(String, bool)> {
    if cfg.count(&text) <= cfg.summary_budget {
        return Ok((text, false));
    }
    let mut bindings = BTreeMap::new();
    bindings.insert("title", book.title.clone());
    bindings.insert("budget", cfg.summary_budget.to_string());
    bindings.insert("aspect_clause", prompts::aspect_clause(aspect));
    bindings.insert("summary", text.clone());
    let user = prompts::compress_summary().render(&bindings)?;
    let req = ChatRequest::new(
        "sum-budget",
        format!("{}:{}:{}", book.id, aspect, method),
        "You compress summaries without losing key points.",
        user,
    );
    let compressed = gateway.chat(&req)?.text.trim().to_string();
    if cfg.count(&compressed) <= cfg.summary_budget {
        return Ok((compressed, false));
    }
    Ok((
        truncate_tokens(&compressed, cfg.tokenizer, cfg.summary_budget),
        true,
    ))
}

pub(crate) fn finish_summary(
    text: String,
    book: &Book,
    aspect: &str,
    method: &str,
    cfg: &SummarizerConfig,
    gateway: &Gateway,
    config_digest: &str,
) -> Result<Summary> {
    let (text, truncated) = enforce_budget(text, book, aspect, method, cfg, gateway)?;
    if text.trim().is_empty() {
        return Err(Error::Unparseable {
            context: format!("{method} summary of {}:{aspect}", book.id),
            raw: text,
        });
    }
    Ok(Summary {
        book_id: book.id.clone(),
        aspect: aspect.to_string(),
        method: method.to_string(),
        token_count: cfg.count(&text),
        text,
        config_digest: config_digest.to_string(),
        truncated,
    })
}

/// Load a JSON checkpoint if it exists and was written for `digest`.
pub(crate) fn load_checkpoint<T: serde::de::DeserializeOwned + CheckpointDigest>(
    path: Option<&Path>,
    digest: &str,
) -> Option<T> {
    let path = path?;
    if !path.exists() {
        return None;
    }
    let ckpt: T = crate::util::read_json(path).ok()?;
    (ckpt.digest() == digest).then_some(ckpt)
}

pub(crate) fn store_checkpoint<T: Serialize>(path: Option<&Path>, ckpt: &T) -> Result<()> {
    if let Some(path) = path {
        crate::util::write_json(path, ckpt)?;
    }
    Ok(())
}

pub(crate) fn clear_checkpoint(path: Option<&Path>) {
    if let Some(path) = path {
        let _ = std::fs::remove_file(path);
    }
}

pub(crate) trait CheckpointDigest {
    fn digest(&self) -> &str;
}
