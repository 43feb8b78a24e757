//! Python bindings for the deterministic core operations: chunking, token
//! counting, record parsing, scoring metrics, and graph inspection.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use aspectsum::corpus::{self, Book, ChunkingConfig, SizeBucket};
use aspectsum::extraction;
use aspectsum::kgraph;
use aspectsum::metrics;
use aspectsum::qagen;
use aspectsum::summarize::{self, TokenizerKind};
use aspectsum::util;

fn to_py_err(err: aspectsum::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Split text into overlapping character windows; offsets count Unicode
/// scalar values. Returns a list of {index, start, end, text} dicts.
#[pyfunction]
#[pyo3(signature = (text, chunk_size=1200, overlap=100))]
fn chunk_text<'py>(
    py: Python<'py>,
    text: &str,
    chunk_size: usize,
    overlap: usize,
) -> PyResult<Bound<'py, PyList>> {
    let book = Book::from_text("py", "py", text);
    let cfg = ChunkingConfig { chunk_size, overlap };
    let chunks = corpus::chunk_text(&book, &cfg).map_err(to_py_err)?;
    let out = PyList::empty(py);
    for chunk in chunks {
        let d = PyDict::new(py);
        d.set_item("index", chunk.index)?;
        d.set_item("start", chunk.start)?;
        d.set_item("end", chunk.end)?;
        d.set_item("text", chunk.text)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Count tokens under the "unicode" (word-boundary) or "whitespace"
/// tokenizer.
#[pyfunction]
#[pyo3(signature = (text, tokenizer="unicode"))]
fn count_tokens(text: &str, tokenizer: &str) -> PyResult<usize> {
    let kind = match tokenizer {
        "unicode" => TokenizerKind::UnicodeWords,
        "whitespace" => TokenizerKind::Whitespace,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown tokenizer {other:?}; expected 'unicode' or 'whitespace'"
            )))
        }
    };
    Ok(summarize::count_tokens(text, kind))
}

/// The size bucket ("small" | "middle" | "large" | "unclassified") for a
/// whitespace word count.
#[pyfunction]
fn size_bucket(word_count: usize) -> &'static str {
    SizeBucket::from_word_count(word_count).as_str()
}

/// ROUGE-1 F1 with clipped unigram counts, in [0, 1].
#[pyfunction]
fn rouge1_f1(candidate: &str, reference: &str) -> f64 {
    metrics::rouge1_f1(candidate, reference)
}

/// METEOR with exact + Porter-stem matching stages, in [0, 1].
#[pyfunction]
fn meteor(candidate: &str, reference: &str) -> f64 {
    metrics::meteor(candidate, reference)
}

/// Semantic (greedy max-cosine) score under the deterministic hash token
/// encoder, in [0, 1].
#[pyfunction]
#[pyo3(signature = (candidate, reference, dim=32))]
fn semantic_score_hash(candidate: &str, reference: &str, dim: usize) -> PyResult<f64> {
    let encoder = metrics::HashTokenEncoder::new(dim);
    metrics::semantic_score(candidate, reference, &encoder).map_err(to_py_err)
}

/// Classic Porter stem of a word.
#[pyfunction]
fn porter_stem(word: &str) -> String {
    metrics::porter_stem(word)
}

/// Canonical entity name: trimmed, whitespace-collapsed, uppercased.
#[pyfunction]
fn canonical_name(raw: &str) -> String {
    extraction::canonical_name(raw)
}

/// Cosine similarity of two equal-length non-zero vectors.
#[pyfunction]
fn cosine(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    util::cosine(&a, &b).map_err(to_py_err)
}

/// Parse a delimited extraction reply into
/// {entities: [...], relations: [...], skipped: int}.
#[pyfunction]
fn parse_extraction_records<'py>(py: Python<'py>, raw: &str) -> PyResult<Bound<'py, PyDict>> {
    let parsed = extraction::parse_records(raw, &("py".to_string(), 0));
    let entities = PyList::empty(py);
    for e in &parsed.entities {
        let d = PyDict::new(py);
        d.set_item("name", &e.name)?;
        d.set_item("entity_type", &e.entity_type)?;
        d.set_item("description", &e.description)?;
        entities.append(d)?;
    }
    let relations = PyList::empty(py);
    for r in &parsed.relations {
        let d = PyDict::new(py);
        d.set_item("source", &r.source)?;
        d.set_item("target", &r.target)?;
        d.set_item("description", &r.description)?;
        d.set_item("keywords", r.keywords.clone())?;
        d.set_item("importance", r.importance)?;
        relations.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("entities", entities)?;
    out.set_item("relations", relations)?;
    out.set_item("skipped", parsed.skipped)?;
    Ok(out)
}

/// A loaded narrative knowledge graph file.
#[pyclass(name = "KnowledgeGraph")]
struct PyKnowledgeGraph {
    inner: kgraph::KnowledgeGraph,
}

#[pymethods]
impl PyKnowledgeGraph {
    /// Load a persisted graph file (version-checked).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = kgraph::load_graph(std::path::Path::new(path)).map_err(to_py_err)?;
        Ok(PyKnowledgeGraph { inner })
    }

    #[getter]
    fn book_id(&self) -> String {
        self.inner.book_id.clone()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.nodes.len()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edges.len()
    }

    /// Edges with accumulated importance >= min_importance, highest first
    /// (at most max_edges), as (source, target, importance) tuples.
    #[pyo3(signature = (min_importance=10, max_edges=100))]
    fn top_edges(&self, min_importance: u64, max_edges: usize) -> Vec<(String, String, u64)> {
        match qagen::select_edges(&self.inner, min_importance, max_edges) {
            Ok(edges) => edges
                .into_iter()
                .map(|e| (e.source, e.target, e.importance))
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

#[pymodule]
fn aspectsum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(chunk_text, m)?)?;
    m.add_function(wrap_pyfunction!(count_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(size_bucket, m)?)?;
    m.add_function(wrap_pyfunction!(rouge1_f1, m)?)?;
    m.add_function(wrap_pyfunction!(meteor, m)?)?;
    m.add_function(wrap_pyfunction!(semantic_score_hash, m)?)?;
    m.add_function(wrap_pyfunction!(porter_stem, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_name, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(parse_extraction_records, m)?)?;
    m.add_class::<PyKnowledgeGraph>()?;
    Ok(())
}
