//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to ingest {path}: {detail}")]
    Ingest { path: PathBuf, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("backend error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Backend {
        status: Option<u16>,
        message: String,
        /// Whether the gateway may retry this failure.
        transient: bool,
    },

    #[error("retries exhausted after {attempts} attempts; last error: {last}")]
    RetriesExhausted { attempts: u32, last: Box<Error> },

    #[error("mock script has no entry for key {key:?}")]
    MockKeyMissing { key: String },

    #[error("unbound placeholder {placeholder:?} in template {template:?}")]
    UnboundPlaceholder { template: String, placeholder: String },

    #[error("model output for {context} could not be parsed: {raw}")]
    Unparseable { context: String, raw: String },

    #[error("graph file version mismatch: found {found}, expected {expected}")]
    GraphVersion { found: u32, expected: u32 },

    #[error("no edge reached the importance threshold; no QA pairs can be generated")]
    EmptySelection,

    #[error("embedding index not built: {path} is missing (run the indexing step first)")]
    IndexMissing { path: PathBuf },

    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("config digest mismatch in {path}: artifact was built with {found}, current config is {expected} (rerun with --force)")]
    DigestMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("missing summaries for: {}", pairs.join(", "))]
    SummaryGap { pairs: Vec<String> },

    #[error("zero vector has no direction; cosine similarity is undefined")]
    ZeroVector,

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True when the gateway retry loop is allowed to re-attempt the call.
    pub fn is_transient(&self) -> bool {
        matches!(self, Error::Backend { transient: true, .. })
    }

    /// Stable machine-readable kind for CLI error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Ingest { .. } => "ingest",
            Error::Config(_) => "config",
            Error::InvalidInput(_) => "invalid_input",
            Error::Json { .. } => "json",
            Error::Backend { .. } => "backend",
            Error::RetriesExhausted { .. } => "retries_exhausted",
            Error::MockKeyMissing { .. } => "mock_key_missing",
            Error::UnboundPlaceholder { .. } => "unbound_placeholder",
            Error::Unparseable { .. } => "unparseable",
            Error::GraphVersion { .. } => "graph_version",
            Error::EmptySelection => "empty_selection",
            Error::IndexMissing { .. } => "index_missing",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::DigestMismatch { .. } => "digest_mismatch",
            Error::SummaryGap { .. } => "summary_gap",
            Error::ZeroVector => "zero_vector",
            Error::DimMismatch { .. } => "dim_mismatch",
        }
    }
}
