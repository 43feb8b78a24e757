//! Pluggable token counting and token-boundary chunking.
//!
//! The default tokenizer is the Unicode word-boundary segmenter, which is
//! offline-deterministic; a plain whitespace tokenizer is available as an
//! alternative.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    #[default]
    UnicodeWords,
    Whitespace,
}

/// Byte spans of the tokens of `text`.
fn token_spans(text: &str, kind: TokenizerKind) -> Vec<(usize, usize)> {
    match kind {
        TokenizerKind::UnicodeWords => text
            .unicode_word_indices()
            .map(|(start, word)| (start, start + word.len()))
            .collect(),
        TokenizerKind::Whitespace => {
            let mut spans = Vec::new();
            let mut start = None;
            for (i, ch) in text.char_indices() {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        spans.push((s, i));
                    }
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                spans.push((s, text.len()));
            }
            spans
        }
    }
}

pub fn count_tokens(text: &str, kind: TokenizerKind) -> usize {
    token_spans(text, kind).len()
}

/// Keep at most `max_tokens` tokens, cutting at a token boundary.
pub fn truncate_tokens(text: &str, kind: TokenizerKind, max_tokens: usize) -> String {
    let spans = token_spans(text, kind);
    if spans.len() <= max_tokens {
        return text.to_string();
    }
    if max_tokens == 0 {
        return String::new();
    }
    text[..spans[max_tokens - 1].1].to_string()
}

/// Split `text` into consecutive pieces of `chunk_tokens` tokens (the final
/// piece may be shorter). Pieces cover the whole text: each starts at a
/// token start and runs to the next boundary, so inter-token characters are
/// preserved.
pub fn token_chunks(text: &str, kind: TokenizerKind, chunk_tokens: usize) -> Vec<String> {
    assert!(chunk_tokens > 0, "chunk_tokens must be positive");
    let spans = token_spans(text, kind);
    if spans.is_empty() {
        return Vec::new();
    }
    let mut chunks = Vec::new();
    let mut begin = 0usize; // byte offset
    let mut i = chunk_tokens;
    while i < spans.len() {
        let end = spans[i].0;
        chunks.push(text[begin..end].to_string());
        begin = end;
        i += chunk_tokens;
    }
    chunks.push(text[begin..].to_string());
    chunks
}
