//! Hierarchical merging: summarize each token chunk, then recursively merge
//! chunk summaries until one remains.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Book;
use crate::error::Result;
use crate::gateway::{ChatRequest, Gateway};
use crate::prompts;
use crate::util;

use super::{
    clear_checkpoint, finish_summary, load_checkpoint, store_checkpoint, token_chunks,
    CheckpointDigest, Summary, SummarizerConfig, METHOD_HIER,
};

#[derive(Serialize, Deserialize)]
struct HierCheckpoint {
    config_digest: String,
    /// levels[0] are the leaf summaries; each completed merge level appends.
    levels: Vec<Vec<String>>,
}

impl CheckpointDigest for HierCheckpoint {
    fn digest(&self) -> &str {
        &self.config_digest
    }
}

/// Greedy first-fit packing by token budget with a forced minimum of two
/// summaries per batch; a trailing singleton is promoted without a call.
fn pack_batches(level: &[String], cfg: &SummarizerConfig) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut batch: Vec<usize> = Vec::new();
    let mut batch_tokens = 0usize;
    for (i, summary) in level.iter().enumerate() {
        let t = cfg.count(summary);
        if batch.len() < 2 || batch_tokens + t <= cfg.merge_batch_budget {
            batch.push(i);
            batch_tokens += t;
        } else {
            batches.push(std::mem::take(&mut batch));
            batch.push(i);
            batch_tokens = t;
        }
    }
    if !batch.is_empty() {
        batches.push(batch);
    }
    batches
}

pub fn summarize_hier(
    book: &Book,
    aspect: &str,
    cfg: &SummarizerConfig,
    gateway: &Gateway,
    config_digest: &str,
    checkpoint: Option<&Path>,
) -> Result<Summary> {
    cfg.validate()?;
    let chunks = token_chunks(&book.text, cfg.tokenizer, cfg.token_chunk_size);

    let mut levels: Vec<Vec<String>> =
        match load_checkpoint::<HierCheckpoint>(checkpoint, config_digest) {
            Some(ckpt) => ckpt.levels,
            None => Vec::new(),
        };

    if levels.is_empty() {
        let aspect_clause = prompts::aspect_clause(aspect);
        let indexed: Vec<(usize, String)> = chunks.into_iter().enumerate().collect();
        let leaves = util::parallel_map(&indexed, gateway.concurrency(), |(i, chunk)| {
            let mut bindings = BTreeMap::new();
            bindings.insert("title", book.title.clone());
            bindings.insert("aspect_clause", aspect_clause.clone());
            bindings.insert("budget", cfg.summary_budget.to_string());
            bindings.insert("chunk", chunk.clone());
            let user = prompts::chunk_summary().render(&bindings)?;
            let req = ChatRequest::new(
                "sum-hier-leaf",
                format!("{}:{}:leaf-{}", book.id, aspect, i),
                "You summarize novel excerpts.",
                user,
            );
            Ok(gateway.chat(&req)?.text.trim().to_string())
        })?;
        levels.push(leaves);
        store_checkpoint(
            checkpoint,
            &HierCheckpoint {
                config_digest: config_digest.to_string(),
                levels: levels.clone(),
            },
        )?;
    }

    while levels.last().unwrap().len() > 1 {
        let current = levels.last().unwrap().clone();
        let level_no = levels.len();
        let batches = pack_batches(&current, cfg);
        let aspect_clause = prompts::aspect_clause(aspect);
        let indexed: Vec<(usize, Vec<usize>)> = batches.into_iter().enumerate().collect();
        let next = util::parallel_map(&indexed, gateway.concurrency(), |(batch_no, members)| {
            if members.len() == 1 {
                // Nothing to merge; promote unchanged.
                return Ok(current[members[0]].clone());
            }
            let joined = members
                .iter()
                .enumerate()
                .map(|(n, &idx)| format!("Part {}:\n{}", n + 1, current[idx]))
                .collect::<Vec<_>>()
                .join("\n\n");
            let mut bindings = BTreeMap::new();
            bindings.insert("title", book.title.clone());
            bindings.insert("aspect_clause", aspect_clause.clone());
            bindings.insert("budget", cfg.summary_budget.to_string());
            bindings.insert("summaries", joined);
            let user = prompts::merge_summaries().render(&bindings)?;
            let req = ChatRequest::new(
                "sum-hier-merge",
                format!("{}:{}:L{}:B{}", book.id, aspect, level_no, batch_no),
                "You merge partial summaries of a novel.",
                user,
            );
            Ok(gateway.chat(&req)?.text.trim().to_string())
        })?;
        debug_assert!(next.len() < current.len(), "merge levels must shrink");
        levels.push(next);
        store_checkpoint(
            checkpoint,
            &HierCheckpoint {
                config_digest: config_digest.to_string(),
                levels: levels.clone(),
            },
        )?;
    }

    let final_text = levels.last().unwrap()[0].clone();
    let summary = finish_summary(
        final_text,
        book,
        aspect,
        METHOD_HIER,
        cfg,
        gateway,
        config_digest,
    )?;
    clear_checkpoint(checkpoint);
    Ok(summary)
}
