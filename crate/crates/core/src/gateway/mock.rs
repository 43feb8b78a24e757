//! Deterministic offline backends: a scripted chat map and a hash embedder.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::util;

use super::{ChatBackend, ChatReply, ChatRequest, EmbeddingBackend, EmbeddingVector};

/// A pure map from `{stage}::{input_key}` to a scripted response. Identical
/// requests get identical responses across process restarts; unscripted keys
/// fail with the missing key named.
pub struct MockChatBackend {
    script: BTreeMap<String, String>,
}

impl MockChatBackend {
    pub fn new(script: BTreeMap<String, String>) -> MockChatBackend {
        MockChatBackend { script }
    }

    pub fn from_file(path: &Path) -> Result<MockChatBackend> {
        let script: BTreeMap<String, String> = util::read_json(path)?;
        Ok(MockChatBackend { script })
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }
}

impl ChatBackend for MockChatBackend {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply> {
        let key = req.script_key();
        match self.script.get(&key) {
            Some(text) => Ok(ChatReply {
                text: text.clone(),
                truncated: false,
            }),
            None => Err(Error::MockKeyMissing { key }),
        }
    }
}

/// Deterministic embedding stand-in: each text maps to a fixed vector
/// derived from its SHA-256 digest. Components lie in (0, 1], so vectors are
/// never all-zero and pairwise cosines are non-negative.
pub struct HashEmbeddingBackend {
    dim: usize,
}

impl HashEmbeddingBackend {
    pub fn new(dim: usize) -> HashEmbeddingBackend {
        HashEmbeddingBackend { dim: dim.max(2) }
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        EmbeddingVector::new(hash_vector(text, self.dim))
    }
}

pub(crate) fn hash_vector(text: &str, dim: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(dim);
    let mut round = 0u32;
    while values.len() < dim {
        let mut hasher = Sha256::new();
        hasher.update(round.to_le_bytes());
        hasher.update(text.as_bytes());
        for byte in hasher.finalize() {
            if values.len() == dim {
                break;
            }
            values.push((byte as f64 + 1.0) / 256.0);
        }
        round += 1;
    }
    values
}

impl EmbeddingBackend for HashEmbeddingBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
