//! Incremental narrative knowledge graph.
//!
//! Entity and relation observations are upserted chunk by chunk: node and
//! edge descriptions accumulate with a separator and are condensed via one
//! gateway call once they exceed a length threshold; edge importance is
//! accumulated additively across observations. Edges are undirected with
//! order-normalized keys. Application order is deterministic (ascending
//! chunk index, record order within a chunk), so rebuilding from the same
//! inputs yields a byte-identical persisted graph.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{chunk_text, Book, ChunkingConfig};
use crate::error::{Error, Result};
use crate::extraction::{extract_chunk, ChunkExtraction, EntityRecord, RelationRecord};
use crate::gateway::{ChatRequest, Gateway};
use crate::prompts::{self, FIELD_DELIMITER};
use crate::util;

pub const GRAPH_FORMAT_VERSION: u32 = 1;
pub const DESCRIPTION_SEPARATOR: &str = "<SEP>";

/// Unordered node pair; the smaller name lexicographically comes first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey(pub String, pub String);

impl EdgeKey {
    pub fn new(a: &str, b: &str) -> EdgeKey {
        if a <= b {
            EdgeKey(a.to_string(), b.to_string())
        } else {
            EdgeKey(b.to_string(), a.to_string())
        }
    }

    pub fn label(&self) -> String {
        format!("{}|{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub entity_type: String,
    pub description: String,
    pub observation_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub description: String,
    /// Sorted, deduplicated.
    pub keywords: Vec<String>,
    /// Sum of the importance values of all contributing observations.
    pub importance: u64,
    pub observation_count: u64,
}

impl Edge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(&self.source, &self.target)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub book_id: String,
    pub build_config_digest: String,
    #[serde(with = "node_map")]
    pub nodes: BTreeMap<String, Node>,
    #[serde(with = "edge_map")]
    pub edges: BTreeMap<EdgeKey, Edge>,
}

// Nodes and edges persist as sorted arrays; BTreeMap keys keep the order
// canonical so equal graphs are byte-equal on disk.
mod node_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<String, Node>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<BTreeMap<String, Node>, D::Error> {
        let rows = Vec::<Node>::deserialize(de)?;
        Ok(rows.into_iter().map(|n| (n.name.clone(), n)).collect())
    }
}

mod edge_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<EdgeKey, Edge>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<BTreeMap<EdgeKey, Edge>, D::Error> {
        let rows = Vec::<Edge>::deserialize(de)?;
        Ok(rows.into_iter().map(|e| (e.key(), e)).collect())
    }
}

impl KnowledgeGraph {
    pub fn new(book_id: impl Into<String>, build_config_digest: impl Into<String>) -> Self {
        KnowledgeGraph {
            book_id: book_id.into(),
            build_config_digest: build_config_digest.into(),
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    /// No edge endpoint may dangle.
    pub fn check_integrity(&self) -> Result<()> {
        for (key, edge) in &self.edges {
            if !self.nodes.contains_key(&edge.source) || !self.nodes.contains_key(&edge.target) {
                return Err(Error::InvalidInput(format!(
                    "edge {} has a dangling endpoint",
                    key.label()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphBuildConfig {
    /// Merged descriptions longer than this many chars get condensed.
    #[serde(default = "default_summarize_threshold")]
    pub summarize_threshold: usize,
    /// Cap on regenerated keyword lists.
    #[serde(default = "default_max_keywords")]
    pub max_keywords: usize,
    /// Persist a checkpoint every N chunks during build.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

fn default_summarize_threshold() -> usize {
    2_000
}
fn default_max_keywords() -> usize {
    10
}
fn default_checkpoint_every() -> usize {
    25
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        GraphBuildConfig {
            summarize_threshold: default_summarize_threshold(),
            max_keywords: default_max_keywords(),
            checkpoint_every: default_checkpoint_every(),
        }
    }
}

/// Single-writer upsert surface over a [`KnowledgeGraph`].
pub struct GraphWriter<'a> {
    pub graph: KnowledgeGraph,
    cfg: &'a GraphBuildConfig,
    gateway: &'a Gateway,
    pub warnings: Vec<String>,
}

impl<'a> GraphWriter<'a> {
    pub fn new(
        graph: KnowledgeGraph,
        cfg: &'a GraphBuildConfig,
        gateway: &'a Gateway,
    ) -> GraphWriter<'a> {
        GraphWriter {
            graph,
            cfg,
            gateway,
            warnings: Vec::new(),
        }
    }

    /// Insert or merge an entity observation; returns the node name.
    pub fn upsert_entity(&mut self, rec: &EntityRecord) -> String {
        match self.graph.nodes.get_mut(&rec.name) {
            None => {
                self.graph.nodes.insert(
                    rec.name.clone(),
                    Node {
                        name: rec.name.clone(),
                        entity_type: rec.entity_type.clone(),
                        description: rec.description.clone(),
                        observation_count: 1,
                    },
                );
            }
            Some(node) => {
                node.observation_count += 1;
                if node.entity_type == "unknown" && rec.entity_type != "unknown" {
                    node.entity_type = rec.entity_type.clone();
                }
                node.description =
                    format!("{}{}{}", node.description, DESCRIPTION_SEPARATOR, rec.description);
                if node.description.chars().count() > self.cfg.summarize_threshold {
                    let merged = node.description.clone();
                    let name = node.name.clone();
                    match self.condense_node(&name, &merged) {
                        Ok(condensed) => {
                            self.graph.nodes.get_mut(&rec.name).unwrap().description = condensed
                        }
                        Err(err) => self.warnings.push(format!(
                            "condensation deferred for node {name}: {err}"
                        )),
                    }
                }
            }
        }
        rec.name.clone()
    }

    /// Insert or merge a relation observation; returns the edge key.
    /// Missing endpoints get placeholder nodes so no observation is lost.
    pub fn upsert_relation(&mut self, rec: &RelationRecord) -> EdgeKey {
        for endpoint in [&rec.source, &rec.target] {
            if !self.graph.nodes.contains_key(endpoint) {
                self.graph.nodes.insert(
                    endpoint.clone(),
                    Node {
                        name: endpoint.clone(),
                        entity_type: "unknown".into(),
                        description: rec.description.clone(),
                        observation_count: 1,
                    },
                );
            }
        }
        let key = EdgeKey::new(&rec.source, &rec.target);
        match self.graph.edges.get_mut(&key) {
            None => {
                let mut keywords: Vec<String> = rec.keywords.clone();
                keywords.sort();
                keywords.dedup();
                self.graph.edges.insert(
                    key.clone(),
                    Edge {
                        source: key.0.clone(),
                        target: key.1.clone(),
                        description: rec.description.clone(),
                        keywords,
                        importance: u64::from(rec.importance),
                        observation_count: 1,
                    },
                );
            }
            Some(edge) => {
                edge.importance += u64::from(rec.importance);
                edge.observation_count += 1;
                let union: BTreeSet<String> = edge
                    .keywords
                    .iter()
                    .cloned()
                    .chain(rec.keywords.iter().cloned())
                    .collect();
                edge.keywords = union.into_iter().collect();
                edge.description =
                    format!("{}{}{}", edge.description, DESCRIPTION_SEPARATOR, rec.description);
                if edge.description.chars().count() > self.cfg.summarize_threshold {
                    let merged = edge.description.clone();
                    let key2 = key.clone();
                    match self.condense_edge(&key2, &merged) {
                        Ok((desc, keywords)) => {
                            let edge = self.graph.edges.get_mut(&key).unwrap();
                            edge.description = desc;
                            if !keywords.is_empty() {
                                edge.keywords = keywords;
                            }
                        }
                        Err(err) => self.warnings.push(format!(
                            "condensation deferred for edge {}: {err}",
                            key2.label()
                        )),
                    }
                }
            }
        }
        key
    }

    pub fn apply_extraction(&mut self, extraction: &ChunkExtraction) {
        for entity in &extraction.entities {
            self.upsert_entity(entity);
        }
        for relation in &extraction.relations {
            self.upsert_relation(relation);
        }
    }

    fn condense_node(&self, name: &str, merged: &str) -> Result<String> {
        let mut bindings = BTreeMap::new();
        bindings.insert("name", name.to_string());
        bindings.insert("separator", DESCRIPTION_SEPARATOR.to_string());
        bindings.insert("description", merged.to_string());
        let user = prompts::condense_node().render(&bindings)?;
        let req = ChatRequest::new(
            "condense-node",
            format!("{}:{}:{}", self.graph.book_id, name, util::short_digest(merged)),
            "You condense accumulated entity notes.",
            user,
        );
        let out = self.gateway.chat(&req)?;
        let condensed = out.text.trim().to_string();
        if condensed.is_empty() {
            return Err(Error::Unparseable {
                context: format!("condensation of node {name}"),
                raw: out.text,
            });
        }
        Ok(condensed)
    }

    fn condense_edge(&self, key: &EdgeKey, merged: &str) -> Result<(String, Vec<String>)> {
        let mut bindings = BTreeMap::new();
        bindings.insert("source", key.0.clone());
        bindings.insert("target", key.1.clone());
        bindings.insert("separator", DESCRIPTION_SEPARATOR.to_string());
        bindings.insert("description", merged.to_string());
        bindings.insert("max_keywords", self.cfg.max_keywords.to_string());
        let user = prompts::condense_edge().render(&bindings)?;
        let req = ChatRequest::new(
            "condense-edge",
            format!(
                "{}:{}:{}",
                self.graph.book_id,
                key.label(),
                util::short_digest(merged)
            ),
            "You condense accumulated relationship notes.",
            user,
        );
        let out = self.gateway.chat(&req)?;
        let text = out.text.trim();
        let (desc, keywords) = match text.split_once(FIELD_DELIMITER) {
            Some((d, k)) => {
                let mut ks = crate::extraction::parse_keywords(k);
                ks.sort();
                ks.truncate(self.cfg.max_keywords);
                (d.trim().to_string(), ks)
            }
            None => (text.to_string(), Vec::new()),
        };
        if desc.is_empty() {
            return Err(Error::Unparseable {
                context: format!("condensation of edge {}", key.label()),
                raw: out.text,
            });
        }
        Ok((desc, keywords))
    }
}

/// Per-chunk audit row for archived raw model outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractionAuditRow {
    pub chunk_index: usize,
    pub raw: String,
    pub skipped_count: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions<'p> {
    pub checkpoint_path: Option<&'p Path>,
    pub audit_path: Option<&'p Path>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config_digest: String,
    chunks_done: usize,
    graph: KnowledgeGraph,
}

/// Build the graph for one book: chunk, extract (in parallel, bounded by
/// the gateway cap), then apply upserts in ascending chunk order.
pub fn build_graph(
    book: &Book,
    chunking: &ChunkingConfig,
    cfg: &GraphBuildConfig,
    gateway: &Gateway,
    config_digest: &str,
    opts: BuildOptions<'_>,
) -> Result<KnowledgeGraph> {
    let chunks = chunk_text(book, chunking)?;

    let mut start_at = 0usize;
    let mut graph = KnowledgeGraph::new(&book.id, config_digest);
    if let Some(ckpt_path) = opts.checkpoint_path {
        if ckpt_path.exists() {
            let ckpt: Checkpoint = util::read_json(ckpt_path)?;
            if ckpt.version == GRAPH_FORMAT_VERSION
                && ckpt.config_digest == config_digest
                && ckpt.chunks_done <= chunks.len()
            {
                start_at = ckpt.chunks_done;
                graph = ckpt.graph;
            }
        }
    }

    let mut writer = GraphWriter::new(graph, cfg, gateway);
    let template = prompts::extraction();
    let concurrency = gateway.concurrency();
    let mut audit_rows: Vec<ExtractionAuditRow> = Vec::new();

    let remaining = &chunks[start_at..];
    for (batch_no, batch) in remaining.chunks(cfg.checkpoint_every.max(1)).enumerate() {
        let extractions = util::parallel_map(batch, concurrency, |chunk| {
            extract_chunk(chunk, gateway, &template)
        })?;
        // parallel_map preserves input order; apply ascending.
        for extraction in &extractions {
            writer.apply_extraction(extraction);
            audit_rows.push(ExtractionAuditRow {
                chunk_index: extraction.chunk_index,
                raw: extraction.raw.clone(),
                skipped_count: extraction.skipped,
            });
        }
        if let Some(ckpt_path) = opts.checkpoint_path {
            let done = start_at + (batch_no * cfg.checkpoint_every.max(1)) + batch.len();
            if done < chunks.len() {
                util::write_json(
                    ckpt_path,
                    &Checkpoint {
                        version: GRAPH_FORMAT_VERSION,
                        config_digest: config_digest.to_string(),
                        chunks_done: done,
                        graph: writer.graph.clone(),
                    },
                )?;
            }
        }
    }

    if let Some(audit_path) = opts.audit_path {
        util::write_jsonl(audit_path, &audit_rows)?;
    }
    if let Some(ckpt_path) = opts.checkpoint_path {
        if ckpt_path.exists() {
            std::fs::remove_file(ckpt_path).map_err(|e| Error::io(ckpt_path, e))?;
        }
    }

    writer.graph.check_integrity()?;
    Ok(writer.graph)
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    book_id: String,
    build_config_digest: String,
    #[serde(with = "node_map")]
    nodes: BTreeMap<String, Node>,
    #[serde(with = "edge_map")]
    edges: BTreeMap<EdgeKey, Edge>,
}

/// Canonical serialization: fixed field order, sorted keys, trailing
/// newline. Two saves of one graph are byte-identical.
pub fn graph_to_canonical_json(graph: &KnowledgeGraph) -> Result<String> {
    let file = GraphFile {
        version: GRAPH_FORMAT_VERSION,
        book_id: graph.book_id.clone(),
        build_config_digest: graph.build_config_digest.clone(),
        nodes: graph.nodes.clone(),
        edges: graph.edges.clone(),
    };
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| Error::json("graph", e))?;
    text.push('\n');
    Ok(text)
}

pub fn save_graph(graph: &KnowledgeGraph, path: &Path) -> Result<()> {
    util::write_string(path, &graph_to_canonical_json(graph)?)
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    let text = util::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    let found = value
        .get("version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != GRAPH_FORMAT_VERSION {
        return Err(Error::GraphVersion {
            found,
            expected: GRAPH_FORMAT_VERSION,
        });
    }
    let file: GraphFile =
        serde_json::from_value(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    Ok(KnowledgeGraph {
        book_id: file.book_id,
        build_config_digest: file.build_config_digest,
        nodes: file.nodes,
        edges: file.edges,
    })
}
