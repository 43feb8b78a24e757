//! One declarative config file drives the whole pipeline. Secrets come only
//! from env vars. Every derived artifact embeds the digest of the
//! artifact-relevant parameters so stale inputs are detected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::ChunkingConfig;
use crate::error::{Error, Result};
use crate::gateway::{BackendKind, GatewayConfig};
use crate::kgraph::GraphBuildConfig;
use crate::qagen::{QagenConfig, DEFAULT_ASPECTS};
use crate::summarize::SummarizerConfig;
use crate::util;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BookEntry {
    pub id: String,
    #[serde(default)]
    pub title: Option<String>,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemmerKind {
    #[default]
    Porter,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticBackend {
    /// Deterministic offline token encoder.
    #[default]
    Hash,
    /// Token vectors via the embedding backend.
    Embedding,
    /// Semantic metric reported as absent.
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default)]
    pub stemmer: StemmerKind,
    #[serde(default)]
    pub synonyms_path: Option<PathBuf>,
    #[serde(default)]
    pub semantic: SemanticBackend,
    #[serde(default = "default_semantic_dim")]
    pub semantic_dim: usize,
}

fn default_semantic_dim() -> usize {
    32
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            stemmer: StemmerKind::default(),
            synonyms_path: None,
            semantic: SemanticBackend::default(),
            semantic_dim: default_semantic_dim(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_aspects() -> Vec<String> {
    DEFAULT_ASPECTS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub books: Vec<BookEntry>,
    #[serde(default)]
    pub chunking: ChunkingConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub graph: GraphBuildConfig,
    #[serde(default)]
    pub qagen: QagenConfig,
    #[serde(default)]
    pub summarizer: SummarizerConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "default_aspects")]
    pub aspects: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: default_output_dir(),
            books: Vec::new(),
            chunking: ChunkingConfig::default(),
            gateway: GatewayConfig::default(),
            graph: GraphBuildConfig::default(),
            qagen: QagenConfig::default(),
            summarizer: SummarizerConfig::default(),
            metrics: MetricsConfig::default(),
            aspects: default_aspects(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let cfg: PipelineConfig = util::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.chunking.validate()?;
        self.summarizer.validate()?;
        if self.qagen.top_k == 0 || self.qagen.max_edges == 0 || self.qagen.min_importance == 0 {
            return Err(Error::Config("qagen thresholds must be positive".into()));
        }
        if self.aspects.is_empty() {
            return Err(Error::Config("aspect list must not be empty".into()));
        }
        for book in &self.books {
            if !book.path.exists() {
                return Err(Error::Config(format!(
                    "book {:?}: path {} does not exist",
                    book.id,
                    book.path.display()
                )));
            }
        }
        if let Some(path) = &self.metrics.synonyms_path {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "metrics.synonyms_path {} does not exist",
                    path.display()
                )));
            }
        }
        if self.gateway.backend == BackendKind::Mock {
            if let Some(path) = &self.gateway.mock_script {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "gateway.mock_script {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical string of every parameter that shapes artifacts; hashing it
    /// gives the config digest embedded in outputs.
    pub fn digest_preimage(&self) -> String {
        let backend = match self.gateway.backend {
            BackendKind::Live => "live",
            BackendKind::Mock => "mock",
        };
        format!(
            "chunk_size={};overlap={};summarize_threshold={};max_keywords={};\
             min_importance={};max_edges={};top_k={};keyword_similarity={:?};\
             summary_budget={};token_chunk_size={};retrieval_k={};merge_batch_budget={};\
             tokenizer={:?};backend={};chat_model={};answer_model={};embed_model={};\
             mock_embed_dim={};semantic={:?};stemmer={:?};aspects={}",
            self.chunking.chunk_size,
            self.chunking.overlap,
            self.graph.summarize_threshold,
            self.graph.max_keywords,
            self.qagen.min_importance,
            self.qagen.max_edges,
            self.qagen.top_k,
            self.qagen.keyword_similarity,
            self.summarizer.summary_budget,
            self.summarizer.token_chunk_size,
            self.summarizer.retrieval_k,
            self.summarizer.merge_batch_budget,
            self.summarizer.tokenizer,
            backend,
            self.gateway.chat_model,
            self.gateway.answer_model.as_deref().unwrap_or_default(),
            self.gateway.embed_model,
            self.gateway.mock_embed_dim,
            self.metrics.semantic,
            self.metrics.stemmer,
            self.aspects.join(","),
        )
    }

    pub fn digest(&self) -> String {
        util::sha256_hex(&self.digest_preimage())[..16].to_string()
    }
}
