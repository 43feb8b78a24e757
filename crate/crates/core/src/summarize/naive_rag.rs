//! NaiveRAG: embed the book's chunks once, retrieve the chunks most similar
//! to the aspect query, and generate a summary from them. The index is
//! built per book and reused across aspects.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Book;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, EmbeddingVector, Gateway};
use crate::prompts;
use crate::qagen::GENERIC_ASPECT;
use crate::util;

use super::{finish_summary, token_chunks, Summary, SummarizerConfig, METHOD_NAIVERAG};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RagIndex {
    pub config_digest: String,
    pub book_id: String,
    pub dim: usize,
    pub chunks: Vec<String>,
    pub embeddings: Vec<Vec<f64>>,
}

impl RagIndex {
    /// Embed every token chunk of the book in one batch.
    pub fn build(
        book: &Book,
        cfg: &SummarizerConfig,
        gateway: &Gateway,
        config_digest: &str,
    ) -> Result<RagIndex> {
        cfg.validate()?;
        let chunks = token_chunks(&book.text, cfg.tokenizer, cfg.token_chunk_size);
        if chunks.is_empty() {
            return Err(Error::InvalidInput(format!(
                "book {:?} has no tokens to index",
                book.id
            )));
        }
        let vectors = gateway.embed("rag-index", &chunks)?;
        let dim = vectors.first().map(|v| v.dim).unwrap_or(0);
        Ok(RagIndex {
            config_digest: config_digest.to_string(),
            book_id: book.id.clone(),
            dim,
            chunks,
            embeddings: vectors.into_iter().map(|v| v.values).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<RagIndex> {
        if !path.exists() {
            return Err(Error::IndexMissing {
                path: path.to_path_buf(),
            });
        }
        util::read_json(path)
    }

    /// Exhaustive scan: top k chunks by cosine similarity, ties broken by
    /// chunk index ascending.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<(usize, f64)>> {
        let mut scored: Vec<(usize, f64)> = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, emb)| Ok((i, util::cosine(&query.values, emb)?)))
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("cosine is never NaN")
                .then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(k);
        Ok(scored)
    }
}

/// The retrieval/generation query text for one aspect.
pub fn rag_query_text(aspect: &str) -> Result<String> {
    if aspect == GENERIC_ASPECT {
        prompts::rag_query_generic().render(&BTreeMap::new())
    } else {
        let mut bindings = BTreeMap::new();
        bindings.insert("aspect", aspect.to_string());
        prompts::rag_query().render(&bindings)
    }
}

pub fn summarize_naiverag(
    book: &Book,
    index: &RagIndex,
    aspect: &str,
    cfg: &SummarizerConfig,
    gateway: &Gateway,
    config_digest: &str,
) -> Result<Summary> {
    cfg.validate()?;
    let query = rag_query_text(aspect)?;
    let query_vec = gateway
        .embed("rag-query", &[query.clone()])?
        .into_iter()
        .next()
        .expect("one vector per text");
    let hits = index.top_k(&query_vec, cfg.retrieval_k)?;
    let passages = hits
        .iter()
        .enumerate()
        .map(|(n, (idx, _))| format!("Passage {}:\n{}", n + 1, index.chunks[*idx]))
        .collect::<Vec<_>>()
        .join("\n\n");

    let mut bindings = BTreeMap::new();
    bindings.insert("budget", cfg.summary_budget.to_string());
    bindings.insert("query", query);
    bindings.insert("passages", passages);
    let user = prompts::rag_generate().render(&bindings)?;
    let req = ChatRequest::new(
        "sum-rag",
        format!("{}:{}", book.id, aspect),
        "You answer summarization requests from retrieved passages only.",
        user,
    );
    let text = gateway.chat(&req)?.text.trim().to_string();
    finish_summary(text, book, aspect, METHOD_NAIVERAG, cfg, gateway, config_digest)
}
