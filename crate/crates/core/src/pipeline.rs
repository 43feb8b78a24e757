//! Stage orchestration: artifact layout, digest-keyed idempotent stage
//! skipping, and structured per-stage logs.
//!
//! Artifact tree:
//! ```text
//! out/
//!   manifest.json
//!   {book_id}/graph.json
//!   {book_id}/qa.jsonl
//!   {book_id}/assignments.json
//!   {book_id}/rag_index.json
//!   {book_id}/summaries/{method}.jsonl
//!   {book_id}/eval/{method}.jsonl
//!   reports/report-{grouping}.{csv,txt}
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{PipelineConfig, SemanticBackend, StemmerKind};
use crate::corpus::{ingest_book, Book, ManifestEntry, SizeBucket};
use crate::error::{Error, Result};
use crate::evaluation::{self, report, EvalRecord, GroupBy};
use crate::gateway::{Gateway, GatewayStats};
use crate::kgraph::{self, BuildOptions};
use crate::metrics::{
    EmbeddingTokenEncoder, HashTokenEncoder, MeteorOptions, PorterStemmer, ScoringOptions,
    Stemmer, TokenEncoder,
};
use crate::qagen::{self, Aspect, QAPair, RankedQa, GENERIC_ASPECT};
use crate::summarize::{
    self, RagIndex, Summary, METHOD_HIER, METHOD_INC, METHOD_NAIVERAG,
};
use crate::util;

/// First line of header-carrying JSONL artifacts.
#[derive(Debug, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub kind: String,
    pub config_digest: String,
}

pub fn write_artifact_jsonl<T: Serialize>(
    path: &std::path::Path,
    kind: &str,
    digest: &str,
    records: &[T],
) -> Result<()> {
    let mut lines = vec![serde_json::to_string(&ArtifactHeader {
        kind: kind.to_string(),
        config_digest: digest.to_string(),
    })
    .map_err(|e| Error::json(path.display().to_string(), e))?];
    for record in records {
        lines.push(
            serde_json::to_string(record).map_err(|e| Error::json(path.display().to_string(), e))?,
        );
    }
    util::write_string(path, &(lines.join("\n") + "\n"))
}

pub fn read_artifact_jsonl<T: DeserializeOwned>(
    path: &std::path::Path,
    expected_digest: Option<&str>,
) -> Result<(ArtifactHeader, Vec<T>)> {
    let text = util::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| Error::InvalidInput(format!(
        "{} is empty; expected a header line",
        path.display()
    )))?;
    let header: ArtifactHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    if let Some(expected) = expected_digest {
        if header.config_digest != expected {
            return Err(Error::DigestMismatch {
                path: path.to_path_buf(),
                found: header.config_digest,
                expected: expected.to_string(),
            });
        }
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        records.push(
            serde_json::from_str(line)
                .map_err(|e| Error::json(format!("{}:{}", path.display(), n + 2), e))?,
        );
    }
    Ok((header, records))
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentsFile {
    config_digest: String,
    /// aspect -> ranked QA ids with similarities.
    assignments: BTreeMap<String, Vec<RankedQa>>,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub digest: String,
    pub gateway: Gateway,
    pub force: bool,
    pub books_filter: Option<Vec<String>>,
    pub aspects_filter: Option<Vec<String>>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Pipeline> {
        cfg.validate()?;
        let gateway = Gateway::from_config(&cfg.gateway)?;
        let digest = cfg.digest();
        Ok(Pipeline {
            cfg,
            digest,
            gateway,
            force,
            books_filter: None,
            aspects_filter: None,
        })
    }

    // ---- paths ----

    pub fn manifest_path(&self) -> PathBuf {
        self.cfg.output_dir.join("manifest.json")
    }

    pub fn book_dir(&self, book_id: &str) -> PathBuf {
        self.cfg.output_dir.join(book_id)
    }

    pub fn graph_path(&self, book_id: &str) -> PathBuf {
        self.book_dir(book_id).join("graph.json")
    }

    pub fn qa_path(&self, book_id: &str) -> PathBuf {
        self.book_dir(book_id).join("qa.jsonl")
    }

    pub fn assignments_path(&self, book_id: &str) -> PathBuf {
        self.book_dir(book_id).join("assignments.json")
    }

    pub fn rag_index_path(&self, book_id: &str) -> PathBuf {
        self.book_dir(book_id).join("rag_index.json")
    }

    pub fn summaries_path(&self, book_id: &str, method: &str) -> PathBuf {
        self.book_dir(book_id).join("summaries").join(format!("{method}.jsonl"))
    }

    pub fn eval_path(&self, book_id: &str, method_label: &str) -> PathBuf {
        self.book_dir(book_id).join("eval").join(format!("{method_label}.jsonl"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.cfg.output_dir.join("reports")
    }

    // ---- shared helpers ----

    fn selected_books(&self) -> Vec<crate::config::BookEntry> {
        self.cfg
            .books
            .iter()
            .filter(|b| match &self.books_filter {
                None => true,
                Some(ids) => ids.contains(&b.id),
            })
            .cloned()
            .collect()
    }

    /// The aspect names a stage works on, after the --aspects filter.
    pub fn selected_aspects(&self) -> Vec<String> {
        self.cfg
            .aspects
            .iter()
            .filter(|a| match &self.aspects_filter {
                None => true,
                Some(names) => names.contains(a),
            })
            .cloned()
            .collect()
    }

    fn log_stage(&self, stage: &str, before: &GatewayStats, details: serde_json::Value) {
        let after = self.gateway.stats();
        let mut entry = json!({
            "stage": stage,
            "chat_calls": after.total_chat_calls() - before.total_chat_calls(),
            "embed_calls": after.total_embed_calls() - before.total_embed_calls(),
            "retries": after.total_retries() - before.total_retries(),
        });
        if let (Some(obj), Some(extra)) = (entry.as_object_mut(), details.as_object()) {
            for (k, v) in extra {
                obj.insert(k.clone(), v.clone());
            }
        }
        eprintln!("{entry}");
    }

    fn token_encoder<'a>(&'a self) -> Option<Box<dyn TokenEncoder + 'a>> {
        match self.cfg.metrics.semantic {
            SemanticBackend::None => None,
            SemanticBackend::Hash => Some(Box::new(HashTokenEncoder::new(
                self.cfg.metrics.semantic_dim,
            ))),
            SemanticBackend::Embedding => Some(Box::new(EmbeddingTokenEncoder {
                gateway: &self.gateway,
            })),
        }
    }

    fn load_synonyms(&self) -> Result<Option<BTreeMap<String, std::collections::BTreeSet<String>>>> {
        match &self.cfg.metrics.synonyms_path {
            None => Ok(None),
            Some(path) => {
                let raw: BTreeMap<String, Vec<String>> = util::read_json(path)?;
                Ok(Some(
                    raw.into_iter()
                        .map(|(word, syns)| {
                            (
                                word.to_lowercase(),
                                syns.into_iter().map(|s| s.to_lowercase()).collect(),
                            )
                        })
                        .collect(),
                ))
            }
        }
    }

    pub fn load_manifest(&self) -> Result<Vec<ManifestEntry>> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                hint: "run the ingest stage first".into(),
            });
        }
        util::read_json(&path)
    }

    fn load_selected_books(&self) -> Result<Vec<Book>> {
        let manifest = self.load_manifest()?;
        let mut books = Vec::new();
        for entry in self.selected_books() {
            let row = manifest
                .iter()
                .find(|m| m.id == entry.id)
                .ok_or_else(|| Error::MissingArtifact {
                    path: self.manifest_path(),
                    hint: format!("book {:?} is not in the manifest; rerun ingest", entry.id),
                })?;
            let mut book = ingest_book(&row.path, &row.id)?;
            book.title = row.title.clone();
            books.push(book);
        }
        Ok(books)
    }

    // ---- stages ----

    /// Ingest configured books and persist the registry manifest.
    pub fn ingest(&self) -> Result<Vec<ManifestEntry>> {
        let before = self.gateway.stats();
        let path = self.manifest_path();
        if !self.force && path.exists() {
            let existing: Vec<ManifestEntry> = util::read_json(&path)?;
            let have: Vec<&str> = existing.iter().map(|e| e.id.as_str()).collect();
            if self.cfg.books.iter().all(|b| have.contains(&b.id.as_str())) {
                self.log_stage("ingest", &before, json!({"skipped": true}));
                return Ok(existing);
            }
        }
        let mut entries = Vec::new();
        for entry in &self.cfg.books {
            let mut book = ingest_book(&entry.path, &entry.id)?;
            if let Some(title) = &entry.title {
                book.title = title.clone();
            }
            entries.push(ManifestEntry {
                id: book.id.clone(),
                title: book.title.clone(),
                path: entry.path.clone(),
                word_count: book.word_count,
                size_bucket: book.size_bucket,
            });
        }
        util::write_json(&path, &entries)?;
        self.log_stage("ingest", &before, json!({"books": entries.len()}));
        Ok(entries)
    }

    /// Build (or resume) the knowledge graph for every selected book.
    pub fn build_graphs(&self) -> Result<()> {
        let books = self.load_selected_books()?;
        for book in &books {
            let before = self.gateway.stats();
            let path = self.graph_path(&book.id);
            if !self.force && path.exists() {
                if let Ok(existing) = kgraph::load_graph(&path) {
                    if existing.build_config_digest == self.digest {
                        self.log_stage(
                            "build-graph",
                            &before,
                            json!({"book": book.id, "skipped": true}),
                        );
                        continue;
                    }
                }
            }
            let ckpt = self.book_dir(&book.id).join("graph.ckpt.json");
            let audit = self.book_dir(&book.id).join("extraction_audit.jsonl");
            std::fs::create_dir_all(self.book_dir(&book.id))
                .map_err(|e| Error::io(self.book_dir(&book.id), e))?;
            let graph = kgraph::build_graph(
                book,
                &self.cfg.chunking,
                &self.cfg.graph,
                &self.gateway,
                &self.digest,
                BuildOptions {
                    checkpoint_path: Some(&ckpt),
                    audit_path: Some(&audit),
                },
            )?;
            kgraph::save_graph(&graph, &path)?;
            self.log_stage(
                "build-graph",
                &before,
                json!({
                    "book": book.id,
                    "nodes": graph.nodes.len(),
                    "edges": graph.edges.len(),
                }),
            );
        }
        Ok(())
    }

    /// Select high-importance edges, generate QA pairs, assign to aspects.
    pub fn gen_qa(&self) -> Result<()> {
        let books = self.load_selected_books()?;
        // Aspect-name embeddings are cached on first use and reused for
        // every book.
        let mut aspects: Vec<Aspect> = self.cfg.aspects.iter().map(Aspect::new).collect();
        for book in &books {
            let before = self.gateway.stats();
            let graph_path = self.graph_path(&book.id);
            if !graph_path.exists() {
                return Err(Error::MissingArtifact {
                    path: graph_path,
                    hint: format!("run build-graph for book {:?} first", book.id),
                });
            }
            let qa_path = self.qa_path(&book.id);
            let assignments_path = self.assignments_path(&book.id);
            if !self.force && qa_path.exists() && assignments_path.exists() {
                let qa_ok =
                    read_artifact_jsonl::<QAPair>(&qa_path, Some(&self.digest)).is_ok();
                let asg_ok = util::read_json::<AssignmentsFile>(&assignments_path)
                    .map(|f| f.config_digest == self.digest)
                    .unwrap_or(false);
                if qa_ok && asg_ok {
                    self.log_stage("gen-qa", &before, json!({"book": book.id, "skipped": true}));
                    continue;
                }
            }

            let graph = kgraph::load_graph(&graph_path)?;
            if graph.build_config_digest != self.digest {
                return Err(Error::DigestMismatch {
                    path: graph_path,
                    found: graph.build_config_digest,
                    expected: self.digest.clone(),
                });
            }

            let (qas, skipped) = match qagen::select_edges(
                &graph,
                self.cfg.qagen.min_importance,
                self.cfg.qagen.max_edges,
            ) {
                Ok(edges) => qagen::generate_qas(&edges, &book.id, &self.gateway, self.gateway.concurrency())?,
                Err(Error::EmptySelection) => {
                    eprintln!(
                        "{}",
                        json!({
                            "warning": "no edge reached the importance threshold",
                            "book": book.id,
                        })
                    );
                    (Vec::new(), Vec::new())
                }
                Err(other) => return Err(other),
            };
            write_artifact_jsonl(&qa_path, "qa-store", &self.digest, &qas)?;
            if !skipped.is_empty() {
                let audit_path = self.book_dir(&book.id).join("qa_audit.jsonl");
                util::write_jsonl(&audit_path, &skipped)?;
            }

            let (assignments, excluded) = if qas.is_empty() {
                (
                    aspects
                        .iter()
                        .map(|a| qagen::AspectAssignment {
                            aspect: a.name.clone(),
                            ranked: Vec::new(),
                        })
                        .collect(),
                    Vec::new(),
                )
            } else {
                qagen::assign_aspects(&qas, &mut aspects, &self.cfg.qagen, &self.gateway)?
            };
            if !excluded.is_empty() {
                eprintln!(
                    "{}",
                    json!({
                        "warning": "QA pairs without keywords excluded from ranking",
                        "book": book.id,
                        "qa_ids": excluded,
                    })
                );
            }
            let file = AssignmentsFile {
                config_digest: self.digest.clone(),
                assignments: assignments
                    .into_iter()
                    .map(|a| (a.aspect, a.ranked))
                    .collect(),
            };
            util::write_json(&assignments_path, &file)?;
            self.log_stage(
                "gen-qa",
                &before,
                json!({"book": book.id, "qas": qas.len(), "skipped_edges": skipped.len()}),
            );
        }
        Ok(())
    }

    fn checkpoint_path(&self, book_id: &str, method: &str, aspect: &str) -> PathBuf {
        let slug: String = aspect
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { '-' })
            .collect();
        self.book_dir(book_id)
            .join("summaries")
            .join(format!(".ckpt-{method}-{slug}.json"))
    }

    /// Produce summaries for the given methods and aspect names (aspect
    /// names may include "GENERIC").
    pub fn summarize(&self, methods: &[String], aspect_names: &[String]) -> Result<()> {
        let books = self.load_selected_books()?;
        for book in &books {
            for method in methods {
                let before = self.gateway.stats();
                let path = self.summaries_path(&book.id, method);
                let mut existing: BTreeMap<String, Summary> = BTreeMap::new();
                if path.exists() {
                    if let Ok(rows) = util::read_jsonl::<Summary>(&path) {
                        for row in rows {
                            if row.config_digest == self.digest {
                                existing.insert(row.aspect.clone(), row);
                            }
                        }
                    }
                }

                let todo: Vec<String> = aspect_names
                    .iter()
                    .filter(|a| self.force || !existing.contains_key(*a))
                    .cloned()
                    .collect();
                if todo.is_empty() {
                    self.log_stage(
                        "summarize",
                        &before,
                        json!({"book": book.id, "method": method, "skipped": true}),
                    );
                    continue;
                }

                // NaiveRAG indexes the book once and reuses it per aspect.
                let rag_index = if method == METHOD_NAIVERAG {
                    let index_path = self.rag_index_path(&book.id);
                    let index = match RagIndex::load(&index_path) {
                        Ok(index) if index.config_digest == self.digest && !self.force => index,
                        _ => {
                            let index = RagIndex::build(
                                book,
                                &self.cfg.summarizer,
                                &self.gateway,
                                &self.digest,
                            )?;
                            index.save(&index_path)?;
                            index
                        }
                    };
                    Some(index)
                } else {
                    None
                };

                for aspect in &todo {
                    let summary = match method.as_str() {
                        METHOD_HIER => {
                            let ckpt = self.checkpoint_path(&book.id, method, aspect);
                            summarize::summarize_hier(
                                book,
                                aspect,
                                &self.cfg.summarizer,
                                &self.gateway,
                                &self.digest,
                                Some(&ckpt),
                            )?
                        }
                        METHOD_INC => {
                            let ckpt = self.checkpoint_path(&book.id, method, aspect);
                            summarize::summarize_inc(
                                book,
                                aspect,
                                &self.cfg.summarizer,
                                &self.gateway,
                                &self.digest,
                                Some(&ckpt),
                            )?
                        }
                        METHOD_NAIVERAG => summarize::summarize_naiverag(
                            book,
                            rag_index.as_ref().expect("index built above"),
                            aspect,
                            &self.cfg.summarizer,
                            &self.gateway,
                            &self.digest,
                        )?,
                        other => {
                            return Err(Error::InvalidInput(format!(
                                "unknown method {other:?}; expected one of hier, inc, naiverag"
                            )))
                        }
                    };
                    existing.insert(aspect.clone(), summary);
                }

                let rows: Vec<&Summary> = existing.values().collect();
                util::write_jsonl(&path, &rows)?;
                self.log_stage(
                    "summarize",
                    &before,
                    json!({"book": book.id, "method": method, "aspects": todo.len()}),
                );
            }
        }
        Ok(())
    }

    fn load_summaries(
        &self,
        book_id: &str,
        method: &str,
    ) -> Result<BTreeMap<String, Summary>> {
        let path = self.summaries_path(book_id, method);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                hint: format!("run summarize --method {method} for book {book_id:?} first"),
            });
        }
        let rows: Vec<Summary> = util::read_jsonl(&path)?;
        let mut map = BTreeMap::new();
        for row in rows {
            if row.config_digest != self.digest {
                return Err(Error::DigestMismatch {
                    path,
                    found: row.config_digest,
                    expected: self.digest.clone(),
                });
            }
            map.insert(row.aspect.clone(), row);
        }
        Ok(map)
    }

    /// Answer and score each aspect's assigned QAs per method. With
    /// `generic`, every aspect's QAs are answered from the book's GENERIC
    /// summary instead (method label gains a "-generic" suffix).
    pub fn evaluate(&self, methods: &[String], generic: bool) -> Result<()> {
        let books = self.load_selected_books()?;
        let aspect_names = self.selected_aspects();
        let book_ids: Vec<String> = books.iter().map(|b| b.id.clone()).collect();

        let mut qa_store: BTreeMap<String, BTreeMap<String, QAPair>> = BTreeMap::new();
        let mut assignments: BTreeMap<String, Vec<qagen::AspectAssignment>> = BTreeMap::new();
        for book in &books {
            let qa_path = self.qa_path(&book.id);
            if !qa_path.exists() {
                return Err(Error::MissingArtifact {
                    path: qa_path,
                    hint: format!("run gen-qa for book {:?} first", book.id),
                });
            }
            let (_, qas) = read_artifact_jsonl::<QAPair>(&qa_path, Some(&self.digest))?;
            qa_store.insert(
                book.id.clone(),
                qas.into_iter().map(|q| (q.id.clone(), q)).collect(),
            );
            let file: AssignmentsFile = util::read_json(&self.assignments_path(&book.id))?;
            if file.config_digest != self.digest {
                return Err(Error::DigestMismatch {
                    path: self.assignments_path(&book.id),
                    found: file.config_digest,
                    expected: self.digest.clone(),
                });
            }
            assignments.insert(
                book.id.clone(),
                file.assignments
                    .into_iter()
                    .map(|(aspect, ranked)| qagen::AspectAssignment { aspect, ranked })
                    .collect(),
            );
        }

        let encoder = self.token_encoder();
        let synonyms = self.load_synonyms()?;
        let porter = PorterStemmer;
        let stemmer: Option<&dyn Stemmer> = match self.cfg.metrics.stemmer {
            StemmerKind::Porter => Some(&porter),
            StemmerKind::None => None,
        };
        let scoring = ScoringOptions {
            meteor: MeteorOptions {
                stemmer,
                synonyms: synonyms.as_ref(),
            },
            encoder: encoder.as_deref(),
        };
        for method in methods {
            let before = self.gateway.stats();
            let label = if generic {
                format!("{method}-generic")
            } else {
                method.clone()
            };

            let mut outputs_exist = true;
            for book in &books {
                let path = self.eval_path(&book.id, &label);
                if !(path.exists()
                    && read_artifact_jsonl::<EvalRecord>(&path, Some(&self.digest)).is_ok())
                {
                    outputs_exist = false;
                }
            }
            if outputs_exist && !self.force {
                self.log_stage(
                    "evaluate",
                    &before,
                    json!({"method": label, "skipped": true}),
                );
                continue;
            }

            let mut summaries: BTreeMap<(String, String), Summary> = BTreeMap::new();
            for book in &books {
                let per_aspect = self.load_summaries(&book.id, method)?;
                if generic {
                    let g = per_aspect.get(GENERIC_ASPECT).ok_or_else(|| {
                        Error::SummaryGap {
                            pairs: vec![format!("{}/{}", book.id, GENERIC_ASPECT)],
                        }
                    })?;
                    for aspect in &aspect_names {
                        let mut s = g.clone();
                        s.aspect = aspect.clone();
                        s.method = label.clone();
                        summaries.insert((book.id.clone(), aspect.clone()), s);
                    }
                } else {
                    for aspect in &aspect_names {
                        if let Some(s) = per_aspect.get(aspect) {
                            summaries.insert((book.id.clone(), aspect.clone()), s.clone());
                        }
                    }
                }
            }

            let records = evaluation::evaluate_method(
                &label,
                &book_ids,
                &aspect_names,
                &qa_store,
                &assignments,
                &summaries,
                &self.gateway,
                self.cfg.gateway.answer_model.as_deref(),
                &scoring,
            )?;

            for book in &books {
                let rows: Vec<&EvalRecord> =
                    records.iter().filter(|r| r.book_id == book.id).collect();
                write_artifact_jsonl(
                    &self.eval_path(&book.id, &label),
                    "eval-records",
                    &self.digest,
                    &rows,
                )?;
            }
            let failures = records.iter().filter(|r| r.failed).count();
            self.log_stage(
                "evaluate",
                &before,
                json!({"method": label, "records": records.len(), "failures": failures}),
            );
        }
        Ok(())
    }

    fn load_all_eval_records(&self) -> Result<Vec<EvalRecord>> {
        let books = self.selected_books();
        let mut records = Vec::new();
        let mut found_any = false;
        for book in &books {
            let dir = self.book_dir(&book.id).join("eval");
            if !dir.exists() {
                continue;
            }
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().map(|e| e == "jsonl").unwrap_or(false))
                .collect();
            entries.sort();
            for path in entries {
                let (_, rows) = read_artifact_jsonl::<EvalRecord>(&path, Some(&self.digest))?;
                records.extend(rows);
                found_any = true;
            }
        }
        if !found_any {
            return Err(Error::MissingArtifact {
                path: self.cfg.output_dir.clone(),
                hint: "no eval records found; run evaluate first".into(),
            });
        }
        Ok(records)
    }

    /// Aggregate persisted eval records and write CSV + text reports.
    /// Returns the rendered text report.
    pub fn report(&self, group_by: GroupBy, weight_by_book: bool) -> Result<String> {
        let before = self.gateway.stats();
        let manifest = self.load_manifest()?;
        let buckets: BTreeMap<String, SizeBucket> = manifest
            .iter()
            .map(|m| (m.id.clone(), m.size_bucket))
            .collect();
        let records = self.load_all_eval_records()?;
        let rows = evaluation::aggregate(&records, group_by, &buckets, weight_by_book);
        let label = match group_by {
            GroupBy::Aspect => "aspect",
            GroupBy::SizeBucket => "size",
            GroupBy::Overall => "overall",
        };
        let title = format!("QA scores grouped by {label}");
        let text = report::render_text(&rows, &title, &self.digest);
        let csv = report::render_csv(&rows, &self.digest);
        let dir = self.reports_dir();
        util::write_string(&dir.join(format!("report-{label}.txt")), &text)?;
        util::write_string(&dir.join(format!("report-{label}.csv")), &csv)?;
        self.log_stage(
            "report",
            &before,
            json!({"group_by": label, "rows": rows.len()}),
        );
        Ok(text)
    }

    /// Score GENERIC summaries against user-supplied reference summaries
    /// (`<dir>/<book_id>.txt`) and write the comparison report.
    pub fn report_references(&self, references_dir: &std::path::Path) -> Result<String> {
        let before = self.gateway.stats();
        let books = self.selected_books();
        let mut references = BTreeMap::new();
        for book in &books {
            let path = references_dir.join(format!("{}.txt", book.id));
            if path.exists() {
                references.insert(book.id.clone(), util::read_to_string(&path)?);
            }
        }
        let mut generic_summaries = Vec::new();
        for book in &books {
            for method in summarize::ALL_METHODS {
                let path = self.summaries_path(&book.id, method);
                if !path.exists() {
                    continue;
                }
                let rows: Vec<Summary> = util::read_jsonl(&path)?;
                generic_summaries.extend(
                    rows.into_iter()
                        .filter(|s| s.aspect == GENERIC_ASPECT && s.config_digest == self.digest),
                );
            }
        }
        let encoder = self.token_encoder();
        let synonyms = self.load_synonyms()?;
        let porter = PorterStemmer;
        let stemmer: Option<&dyn Stemmer> = match self.cfg.metrics.stemmer {
            StemmerKind::Porter => Some(&porter),
            StemmerKind::None => None,
        };
        let scoring = ScoringOptions {
            meteor: MeteorOptions {
                stemmer,
                synonyms: synonyms.as_ref(),
            },
            encoder: encoder.as_deref(),
        };
        let (rows, warnings) =
            evaluation::compare_generic_to_reference(&generic_summaries, &references, &scoring);
        for warning in &warnings {
            eprintln!("{}", json!({"warning": warning}));
        }
        let text = if rows.is_empty() {
            "No reference comparison rows: no reference summaries were supplied.\n".to_string()
        } else {
            report::render_text(&rows, "Generic summaries vs references", &self.digest)
        };
        let dir = self.reports_dir();
        util::write_string(&dir.join("report-references.txt"), &text)?;
        util::write_string(
            &dir.join("report-references.csv"),
            &report::render_csv(&rows, &self.digest),
        )?;
        self.log_stage("report-references", &before, json!({"rows": rows.len()}));
        Ok(text)
    }

    /// The whole pipeline: ingest, graphs, QA, summaries for all methods,
    /// evaluation, and the three standard reports.
    pub fn run_all(&self, methods: &[String]) -> Result<()> {
        self.ingest()?;
        self.build_graphs()?;
        self.gen_qa()?;
        let aspects = self.selected_aspects();
        self.summarize(methods, &aspects)?;
        self.evaluate(methods, false)?;
        for group_by in [GroupBy::Aspect, GroupBy::SizeBucket, GroupBy::Overall] {
            self.report(group_by, false)?;
        }
        Ok(())
    }
}

pub fn default_methods() -> Vec<String> {
    vec![
        METHOD_HIER.to_string(),
        METHOD_INC.to_string(),
        METHOD_NAIVERAG.to_string(),
    ]
}
