//! Reference-free evaluation for aspect-based book summarization.
//!
//! The pipeline builds a narrative knowledge graph from a book via LLM
//! extraction, synthesizes aspect-specific QA pairs from high-importance
//! graph edges, generates baseline summaries (hierarchical merging,
//! incremental updating, NaiveRAG), and scores each summary by how well an
//! answering model can answer the aspect's QAs using only that summary.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod gateway;
pub mod kgraph;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod qagen;
pub mod summarize;
pub mod util;

pub use error::{Error, Result};
