//! The evaluation loop: answer each aspect's QAs using only the candidate
//! summary, score answers against the ground truth, and aggregate into
//! report rows.

pub mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SizeBucket;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway};
use crate::metrics::{score_with, ScoreTriple, ScoringOptions};
use crate::prompts;
use crate::qagen::{AspectAssignment, QAPair};
use crate::summarize::Summary;
use crate::util;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub book_id: String,
    pub method: String,
    pub aspect: String,
    pub qa_id: String,
    /// Recorded verbatim.
    pub model_answer: String,
    pub scores: ScoreTriple,
    /// Rendered answering prompt, persisted so the no-book-text invariant
    /// stays auditable.
    pub prompt: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<String>,
}

/// One answering call: the prompt contains the summary text and the
/// question, never the book text. The answering model defaults to the
/// gateway's chat model but may be overridden via `answer_model`.
pub fn answer_qa(
    summary: &Summary,
    qa: &QAPair,
    gateway: &Gateway,
    answer_model: Option<&str>,
) -> Result<(String, String)> {
    if summary.token_count == 0 || summary.text.trim().is_empty() {
        return Err(Error::InvalidInput(format!(
            "summary for {}:{} is empty; refusing to answer against it",
            summary.book_id, summary.aspect
        )));
    }
    let mut bindings = BTreeMap::new();
    bindings.insert("summary", summary.text.clone());
    bindings.insert("question", qa.question.clone());
    let prompt = prompts::qa_answer().render(&bindings)?;
    let mut req = ChatRequest::new(
        "answer",
        format!(
            "{}:{}:{}:{}",
            summary.method, summary.book_id, summary.aspect, qa.id
        ),
        "You answer questions strictly from the provided summary.",
        prompt.clone(),
    );
    if let Some(model) = answer_model {
        req.model_tag = model.to_string();
    }
    let outcome = gateway.chat(&req)?;
    Ok((outcome.text, prompt))
}

/// Evaluate one method over every (book, aspect): answer the aspect's
/// assigned QAs and score each answer against the ground truth. Missing
/// summaries are reported as an explicit gap before any call is made;
/// per-record gateway failures yield failed records, not aborts.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_method(
    method: &str,
    book_ids: &[String],
    asplist: &[String],
    qa_store: &BTreeMap<String, BTreeMap<String, QAPair>>,
    assignments: &BTreeMap<String, Vec<AspectAssignment>>,
    summaries: &BTreeMap<(String, String), Summary>,
    gateway: &Gateway,
    answer_model: Option<&str>,
    scoring: &ScoringOptions<'_>,
) -> Result<Vec<EvalRecord>> {
    let mut missing = Vec::new();
    for book_id in book_ids {
        for aspect in asplist {
            if !summaries.contains_key(&(book_id.clone(), aspect.clone())) {
                missing.push(format!("{book_id}/{aspect}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::SummaryGap { pairs: missing });
    }

    let mut jobs: Vec<(&Summary, &QAPair)> = Vec::new();
    for book_id in book_ids {
        let book_assignments = match assignments.get(book_id) {
            Some(a) => a,
            None => continue,
        };
        let book_qas = match qa_store.get(book_id) {
            Some(q) => q,
            None => continue,
        };
        for aspect in asplist {
            let summary = &summaries[&(book_id.clone(), aspect.clone())];
            let Some(assignment) = book_assignments.iter().find(|a| &a.aspect == aspect) else {
                continue;
            };
            for ranked in &assignment.ranked {
                if let Some(qa) = book_qas.get(&ranked.qa_id) {
                    jobs.push((summary, qa));
                }
            }
        }
    }

    let answers = util::parallel_map(&jobs, gateway.concurrency(), |(summary, qa)| {
        Ok(answer_qa(summary, qa, gateway, answer_model))
    })?;

    let mut records = Vec::with_capacity(jobs.len());
    for ((summary, qa), answer) in jobs.iter().zip(answers) {
        let record = match answer {
            Ok((model_answer, prompt)) => {
                let (scores, audit) = score_with(&model_answer, &qa.answer, scoring);
                EvalRecord {
                    book_id: summary.book_id.clone(),
                    method: method.to_string(),
                    aspect: summary.aspect.clone(),
                    qa_id: qa.id.clone(),
                    model_answer,
                    scores,
                    prompt,
                    failed: false,
                    audit,
                }
            }
            Err(err) => EvalRecord {
                book_id: summary.book_id.clone(),
                method: method.to_string(),
                aspect: summary.aspect.clone(),
                qa_id: qa.id.clone(),
                model_answer: String::new(),
                scores: ScoreTriple::default(),
                prompt: String::new(),
                failed: true,
                audit: vec![format!("answering failed: {err}")],
            },
        };
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Aspect,
    SizeBucket,
    Overall,
}

impl GroupBy {
    pub fn parse(s: &str) -> Result<GroupBy> {
        match s {
            "aspect" => Ok(GroupBy::Aspect),
            "size" | "size_bucket" => Ok(GroupBy::SizeBucket),
            "overall" => Ok(GroupBy::Overall),
            other => Err(Error::InvalidInput(format!(
                "unknown group-by {other:?}; expected aspect, size, or overall"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub group: String,
    pub mean_rouge1: Option<f64>,
    pub mean_meteor: Option<f64>,
    pub mean_semantic: Option<f64>,
    /// Scored (non-failed) records behind this row.
    pub n: usize,
    /// Per-field counts; metric values missing on a record are excluded
    /// from that field's mean.
    pub n_rouge1: usize,
    pub n_meteor: usize,
    pub n_semantic: usize,
    pub failures: usize,
}

fn group_label(
    record: &EvalRecord,
    group_by: GroupBy,
    buckets: &BTreeMap<String, SizeBucket>,
) -> String {
    match group_by {
        GroupBy::Aspect => record.aspect.clone(),
        GroupBy::Overall => "overall".to_string(),
        GroupBy::SizeBucket => buckets
            .get(&record.book_id)
            .map(|b| b.as_str().to_string())
            .unwrap_or_else(|| "unclassified".to_string()),
    }
}

/// Arithmetic means per (method, group). With `weight_by_book`, records are
/// first averaged per book and the per-book means are then averaged.
pub fn aggregate(
    records: &[EvalRecord],
    group_by: GroupBy,
    buckets: &BTreeMap<String, SizeBucket>,
    weight_by_book: bool,
) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String), Vec<&EvalRecord>> = BTreeMap::new();
    for record in records {
        let label = group_label(record, group_by, buckets);
        groups
            .entry((record.method.clone(), label))
            .or_default()
            .push(record);
    }

    let mut rows = Vec::new();
    for ((method, group), members) in groups {
        let failures = members.iter().filter(|r| r.failed).count();
        let scored: Vec<&&EvalRecord> = members.iter().filter(|r| !r.failed).collect();

        let field = |get: &dyn Fn(&EvalRecord) -> Option<f64>| -> (Option<f64>, usize) {
            if weight_by_book {
                let mut per_book: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
                for r in &scored {
                    if let Some(v) = get(r) {
                        per_book.entry(r.book_id.as_str()).or_default().push(v);
                    }
                }
                let n: usize = per_book.values().map(Vec::len).sum();
                if per_book.is_empty() {
                    return (None, 0);
                }
                let book_means: Vec<f64> = per_book
                    .values()
                    .map(|vs| vs.iter().sum::<f64>() / vs.len() as f64)
                    .collect();
                (
                    Some(book_means.iter().sum::<f64>() / book_means.len() as f64),
                    n,
                )
            } else {
                let values: Vec<f64> = scored.iter().filter_map(|r| get(r)).collect();
                if values.is_empty() {
                    (None, 0)
                } else {
                    (Some(values.iter().sum::<f64>() / values.len() as f64), values.len())
                }
            }
        };

        let (mean_rouge1, n_rouge1) = field(&|r| r.scores.rouge1);
        let (mean_meteor, n_meteor) = field(&|r| r.scores.meteor);
        let (mean_semantic, n_semantic) = field(&|r| r.scores.semantic);
        rows.push(AggregateRow {
            method,
            group,
            mean_rouge1,
            mean_meteor,
            mean_semantic,
            n: scored.len(),
            n_rouge1,
            n_meteor,
            n_semantic,
            failures,
        });
    }
    rows
}

/// Score generic summaries directly against user-supplied reference
/// summaries with the same three metrics; aggregate per method. Books
/// without a reference are skipped with a warning.
pub fn compare_generic_to_reference(
    summaries: &[Summary],
    references: &BTreeMap<String, String>,
    scoring: &ScoringOptions<'_>,
) -> (Vec<AggregateRow>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut pseudo_records: Vec<EvalRecord> = Vec::new();
    for summary in summaries {
        let Some(reference) = references.get(&summary.book_id) else {
            warnings.push(format!(
                "no reference summary for book {:?}; skipped",
                summary.book_id
            ));
            continue;
        };
        let (scores, audit) = score_with(&summary.text, reference, scoring);
        pseudo_records.push(EvalRecord {
            book_id: summary.book_id.clone(),
            method: summary.method.clone(),
            aspect: summary.aspect.clone(),
            qa_id: String::new(),
            model_answer: String::new(),
            scores,
            prompt: String::new(),
            failed: false,
            audit,
        });
    }
    let rows = aggregate(&pseudo_records, GroupBy::Overall, &BTreeMap::new(), false);
    (rows, warnings)
}
