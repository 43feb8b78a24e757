//! Aspect-specific QA synthesis: filter high-importance edges, generate one
//! QA pair per selected edge, and rank QA pairs per aspect by cosine
//! similarity between the aspect-name embedding and the QA-keyword
//! embedding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, EmbeddingVector, Gateway};
use crate::kgraph::{Edge, EdgeKey, KnowledgeGraph};
use crate::prompts;
use crate::util;

pub const GENERIC_ASPECT: &str = "GENERIC";

/// The default aspect set: fourteen literary genres.
pub const DEFAULT_ASPECTS: [&str; 14] = [
    "Fantasy",
    "Romance",
    "Comedy",
    "Paranormal",
    "Young Adult",
    "Horror",
    "History",
    "Action",
    "Science Fiction",
    "Mystery",
    "Adventure",
    "Crime",
    "Thriller",
    "Poetry",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aspect {
    pub name: String,
    /// Cached name embedding; filled on first use.
    #[serde(skip)]
    pub embedding: Option<EmbeddingVector>,
}

impl Aspect {
    pub fn new(name: impl Into<String>) -> Aspect {
        Aspect {
            name: name.into(),
            embedding: None,
        }
    }
}

pub fn default_aspects() -> Vec<Aspect> {
    DEFAULT_ASPECTS.iter().map(|name| Aspect::new(*name)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub book_id: String,
    pub question: String,
    /// Ground-truth answer.
    pub answer: String,
    pub keywords: Vec<String>,
    pub edge_key: EdgeKey,
    pub edge_importance: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedQa {
    pub qa_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectAssignment {
    pub aspect: String,
    /// Sorted by similarity descending, ties by qa_id ascending; at most
    /// top_k entries.
    pub ranked: Vec<RankedQa>,
}

/// How the QA keyword list is turned into an embedding for ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordSimilarity {
    /// Embed the comma-joined keyword list as one string.
    #[default]
    Joined,
    /// Embed each keyword separately and take the maximum similarity.
    MaxPerKeyword,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QagenConfig {
    #[serde(default = "default_min_importance")]
    pub min_importance: u64,
    #[serde(default = "default_max_edges")]
    pub max_edges: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub keyword_similarity: KeywordSimilarity,
}

fn default_min_importance() -> u64 {
    10
}
fn default_max_edges() -> usize {
    100
}
fn default_top_k() -> usize {
    5
}

impl Default for QagenConfig {
    fn default() -> Self {
        QagenConfig {
            min_importance: default_min_importance(),
            max_edges: default_max_edges(),
            top_k: default_top_k(),
            keyword_similarity: KeywordSimilarity::default(),
        }
    }
}

/// Cosine similarity between two embedding vectors. Zero vectors and
/// dimension mismatches are errors, never a silent 0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    util::cosine(&a.values, &b.values)
}

/// Keep edges with accumulated importance >= min_importance; if more than
/// max_edges qualify, keep the highest-importance ones. Result sorted by
/// (importance descending, key ascending).
pub fn select_edges(
    graph: &KnowledgeGraph,
    min_importance: u64,
    max_edges: usize,
) -> Result<Vec<Edge>> {
    let mut selected: Vec<Edge> = graph
        .edges
        .values()
        .filter(|e| e.importance >= min_importance)
        .cloned()
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    selected.sort_by(|a, b| {
        b.importance
            .cmp(&a.importance)
            .then_with(|| a.key().cmp(&b.key()))
    });
    selected.truncate(max_edges);
    Ok(selected)
}

/// One generated QA or an audited skip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum QaOutcome {
    Generated(QAPair),
    Skipped { edge_key: EdgeKey, raw: String },
}

/// Generate one QA pair from an edge via the 1-shot template. An
/// unparseable reply is retried once, then the edge is skipped with the raw
/// text kept for audit.
pub fn generate_qa(
    edge: &Edge,
    book_id: &str,
    qa_id: &str,
    gateway: &Gateway,
) -> Result<QaOutcome> {
    if edge.description.trim().is_empty() {
        return Err(Error::InvalidInput(format!(
            "edge {} has an empty description",
            edge.key().label()
        )));
    }
    let mut bindings = BTreeMap::new();
    bindings.insert("source", edge.source.clone());
    bindings.insert("target", edge.target.clone());
    bindings.insert("description", edge.description.clone());
    bindings.insert("keywords", edge.keywords.join(", "));
    let user = prompts::qa_generation().render(&bindings)?;
    let req = ChatRequest::new(
        "qa",
        format!("{}:{}", book_id, edge.key().label()),
        "You write question-answer pairs about relationships in novels.",
        user,
    );

    let mut last_raw = String::new();
    for _attempt in 0..2 {
        let out = gateway.chat(&req)?;
        last_raw = out.text.clone();
        if let Some((question, answer, mut keywords)) = parse_qa_output(&out.text) {
            // Generated keywords are unioned with the edge's own.
            keywords.extend(edge.keywords.iter().cloned());
            let mut keywords: Vec<String> = keywords
                .into_iter()
                .map(|k| k.trim().to_lowercase())
                .filter(|k| !k.is_empty())
                .collect();
            keywords.sort();
            keywords.dedup();
            return Ok(QaOutcome::Generated(QAPair {
                id: qa_id.to_string(),
                book_id: book_id.to_string(),
                question,
                answer,
                keywords,
                edge_key: edge.key(),
                edge_importance: edge.importance,
            }));
        }
    }
    Ok(QaOutcome::Skipped {
        edge_key: edge.key(),
        raw: last_raw,
    })
}

/// Parse "Question: ... / Answer: ... / Keywords: ..." labeled output.
/// Labels are case-insensitive; values may span multiple lines.
pub fn parse_qa_output(raw: &str) -> Option<(String, String, Vec<String>)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Field {
        None,
        Question,
        Answer,
        Keywords,
    }
    let mut question = String::new();
    let mut answer = String::new();
    let mut keywords_raw = String::new();
    let mut current = Field::None;
    for line in raw.lines() {
        let lower = line.trim_start().to_lowercase();
        let (field, prefix_len) = if lower.starts_with("question:") {
            (Field::Question, "question:".len())
        } else if lower.starts_with("answer:") {
            (Field::Answer, "answer:".len())
        } else if lower.starts_with("keywords:") {
            (Field::Keywords, "keywords:".len())
        } else {
            (current, 0)
        };
        let value = if prefix_len > 0 {
            current = field;
            &line.trim_start()[prefix_len..]
        } else {
            line
        };
        let target = match field {
            Field::Question => &mut question,
            Field::Answer => &mut answer,
            Field::Keywords => &mut keywords_raw,
            Field::None => continue,
        };
        if !target.is_empty() {
            target.push(' ');
        }
        target.push_str(value.trim());
    }
    let question = question.trim().to_string();
    let answer = answer.trim().to_string();
    if question.is_empty() || answer.is_empty() {
        return None;
    }
    Some((question, answer, crate::extraction::parse_keywords(&keywords_raw)))
}

/// Generate QA pairs for a pre-selected edge list. Ids are assigned by edge
/// order (qa-0000, qa-0001, ...), independent of completion order.
pub fn generate_qas(
    edges: &[Edge],
    book_id: &str,
    gateway: &Gateway,
    workers: usize,
) -> Result<(Vec<QAPair>, Vec<QaOutcome>)> {
    let indexed: Vec<(usize, Edge)> = edges.iter().cloned().enumerate().collect();
    let outcomes = util::parallel_map(&indexed, workers, |(i, edge)| {
        generate_qa(edge, book_id, &format!("qa-{i:04}"), gateway)
    })?;
    let mut qas = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            QaOutcome::Generated(qa) => qas.push(qa),
            skip @ QaOutcome::Skipped { .. } => skipped.push(skip),
        }
    }
    Ok((qas, skipped))
}

/// Rank QA pairs per aspect. QA pairs with no keywords are excluded from
/// ranking and reported back for audit. A QA may serve multiple aspects.
pub fn assign_aspects(
    qas: &[QAPair],
    aspects: &mut [Aspect],
    cfg: &QagenConfig,
    gateway: &Gateway,
) -> Result<(Vec<AspectAssignment>, Vec<String>)> {
    let mut excluded: Vec<String> = Vec::new();
    let ranked_qas: Vec<&QAPair> = qas
        .iter()
        .filter(|qa| {
            let keep = !qa.keywords.is_empty();
            if !keep {
                excluded.push(qa.id.clone());
            }
            keep
        })
        .collect();

    // Fill missing aspect-name embeddings in one batch.
    let missing: Vec<String> = aspects
        .iter()
        .filter(|a| a.embedding.is_none())
        .map(|a| a.name.clone())
        .collect();
    if !missing.is_empty() {
        let vectors = gateway.embed("assign-aspect", &missing)?;
        let mut it = vectors.into_iter();
        for aspect in aspects.iter_mut() {
            if aspect.embedding.is_none() {
                aspect.embedding = it.next();
            }
        }
    }

    let mut assignments = Vec::new();
    if ranked_qas.is_empty() {
        for aspect in aspects.iter() {
            assignments.push(AspectAssignment {
                aspect: aspect.name.clone(),
                ranked: Vec::new(),
            });
        }
        return Ok((assignments, excluded));
    }

    // Embeddings of the QA keyword texts (and per-keyword vectors in
    // MaxPerKeyword mode), one batch each.
    let qa_vectors: Vec<Vec<EmbeddingVector>> = match cfg.keyword_similarity {
        KeywordSimilarity::Joined => {
            let texts: Vec<String> = ranked_qas.iter().map(|qa| qa.keywords.join(", ")).collect();
            gateway
                .embed("assign-qa", &texts)?
                .into_iter()
                .map(|v| vec![v])
                .collect()
        }
        KeywordSimilarity::MaxPerKeyword => {
            let mut flat: Vec<String> = Vec::new();
            let mut spans = Vec::new();
            for qa in &ranked_qas {
                spans.push((flat.len(), qa.keywords.len()));
                flat.extend(qa.keywords.iter().cloned());
            }
            let vectors = gateway.embed("assign-qa", &flat)?;
            spans
                .into_iter()
                .map(|(start, len)| vectors[start..start + len].to_vec())
                .collect()
        }
    };

    for aspect in aspects.iter() {
        let aspect_vec = aspect
            .embedding
            .as_ref()
            .expect("aspect embedding filled above");
        let mut ranked: Vec<RankedQa> = ranked_qas
            .iter()
            .zip(&qa_vectors)
            .map(|(qa, vectors)| {
                let mut best = f64::NEG_INFINITY;
                for v in vectors {
                    best = best.max(cosine(aspect_vec, v)?);
                }
                Ok(RankedQa {
                    qa_id: qa.id.clone(),
                    similarity: best,
                })
            })
            .collect::<Result<_>>()?;
        ranked.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .expect("cosine is never NaN")
                .then_with(|| a.qa_id.cmp(&b.qa_id))
        });
        ranked.truncate(cfg.top_k);
        assignments.push(AspectAssignment {
            aspect: aspect.name.clone(),
            ranked,
        });
    }
    Ok((assignments, excluded))
}
