//! Incremental updating: one running summary, updated per chunk and
//! compressed whenever it exceeds the budget.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Book;
use crate::error::Result;
use crate::gateway::{ChatRequest, Gateway};
use crate::prompts;

use super::{
    clear_checkpoint, finish_summary, load_checkpoint, store_checkpoint, token_chunks,
    CheckpointDigest, Summary, SummarizerConfig, METHOD_INC,
};

#[derive(Serialize, Deserialize)]
struct IncCheckpoint {
    config_digest: String,
    chunks_done: usize,
    running: String,
}

impl CheckpointDigest for IncCheckpoint {
    fn digest(&self) -> &str {
        &self.config_digest
    }
}

pub fn summarize_inc(
    book: &Book,
    aspect: &str,
    cfg: &SummarizerConfig,
    gateway: &Gateway,
    config_digest: &str,
    checkpoint: Option<&Path>,
) -> Result<Summary> {
    cfg.validate()?;
    let chunks = token_chunks(&book.text, cfg.tokenizer, cfg.token_chunk_size);

    let (mut running, start_at) =
        match load_checkpoint::<IncCheckpoint>(checkpoint, config_digest) {
            Some(ckpt) if ckpt.chunks_done <= chunks.len() => (ckpt.running, ckpt.chunks_done),
            _ => (String::new(), 0),
        };

    let aspect_clause = prompts::aspect_clause(aspect);
    for (i, chunk) in chunks.iter().enumerate().skip(start_at) {
        let mut bindings = BTreeMap::new();
        bindings.insert("title", book.title.clone());
        bindings.insert("aspect_clause", aspect_clause.clone());
        bindings.insert("budget", cfg.summary_budget.to_string());
        bindings.insert("running", running.clone());
        bindings.insert("chunk", chunk.clone());
        let user = prompts::incremental_update().render(&bindings)?;
        let req = ChatRequest::new(
            "sum-inc-update",
            format!("{}:{}:U{}", book.id, aspect, i),
            "You maintain a running summary of a novel.",
            user,
        );
        running = gateway.chat(&req)?.text.trim().to_string();

        if cfg.count(&running) > cfg.summary_budget {
            let mut bindings = BTreeMap::new();
            bindings.insert("title", book.title.clone());
            bindings.insert("aspect_clause", aspect_clause.clone());
            bindings.insert("budget", cfg.summary_budget.to_string());
            bindings.insert("summary", running.clone());
            let user = prompts::compress_summary().render(&bindings)?;
            let req = ChatRequest::new(
                "sum-inc-compress",
                format!("{}:{}:C{}", book.id, aspect, i),
                "You compress summaries without losing key points.",
                user,
            );
            running = gateway.chat(&req)?.text.trim().to_string();
        }

        store_checkpoint(
            checkpoint,
            &IncCheckpoint {
                config_digest: config_digest.to_string(),
                chunks_done: i + 1,
                running: running.clone(),
            },
        )?;
    }

    let summary = finish_summary(
        running,
        book,
        aspect,
        METHOD_INC,
        cfg,
        gateway,
        config_digest,
    )?;
    clear_checkpoint(checkpoint);
    Ok(summary)
}
