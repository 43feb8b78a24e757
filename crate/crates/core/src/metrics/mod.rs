//! Answer-vs-ground-truth scoring: ROUGE-1 F1, METEOR, and a semantic
//! (greedy max-cosine token matching) scorer behind a common interface.
//!
//! Scores live in [0, 1]; the report layer multiplies by 100. Degenerate
//! inputs (empty after tokenization) score 0 with an audit note instead of
//! erroring, and a missing semantic backend leaves that field absent rather
//! than fabricated.

mod stem;

pub use stem::{porter_stem, IdentityStemmer, PorterStemmer, Stemmer};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::Result;
use crate::gateway::Gateway;
use crate::util;

/// Lowercased word tokens (Unicode word boundaries).
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(|w| w.to_lowercase()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub rouge1: Option<f64>,
    pub meteor: Option<f64>,
    pub semantic: Option<f64>,
}

/// Unigram-overlap F1 with clipped counts. 0 when there is no overlap or
/// either side is empty after tokenization.
pub fn rouge1_f1(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for token in &refr {
        *ref_counts.entry(token).or_default() += 1;
    }
    let mut cand_counts: HashMap<&str, usize> = HashMap::new();
    for token in &cand {
        *cand_counts.entry(token).or_default() += 1;
    }
    let overlap: usize = cand_counts
        .iter()
        .map(|(token, &c)| c.min(ref_counts.get(token).copied().unwrap_or(0)))
        .sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / cand.len() as f64;
    let recall = overlap as f64 / refr.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Unigram precision of `candidate` against `reference` (clipped counts).
/// Exposed for the P/R symmetry property: P(c, r) == R(r, c).
pub fn rouge1_precision(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for token in &refr {
        *ref_counts.entry(token.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for token in &cand {
        if let Some(left) = ref_counts.get_mut(token.as_str()) {
            if *left > 0 {
                *left -= 1;
                overlap += 1;
            }
        }
    }
    overlap as f64 / cand.len() as f64
}

pub fn rouge1_recall(candidate: &str, reference: &str) -> f64 {
    rouge1_precision(reference, candidate)
}

/// Alignment found by the staged METEOR matcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchAlignment {
    /// (candidate index, reference index), sorted by candidate index;
    /// strictly increasing in both coordinates within a chunk.
    pub pairs: Vec<(usize, usize)>,
    /// Number of maximal runs contiguous in both sequences.
    pub chunk_count: usize,
}

pub struct MeteorOptions<'a> {
    pub stemmer: Option<&'a dyn Stemmer>,
    /// Optional synonym table: word -> synonym set.
    pub synonyms: Option<&'a BTreeMap<String, BTreeSet<String>>>,
}

impl Default for MeteorOptions<'_> {
    fn default() -> Self {
        static PORTER: PorterStemmer = PorterStemmer;
        MeteorOptions {
            stemmer: Some(&PORTER),
            synonyms: None,
        }
    }
}

/// Staged unigram alignment: exact matches first, then stem matches, then
/// (when a table is supplied) synonym matches. Within a stage each
/// candidate token takes the first unused reference token.
pub fn align(cand: &[String], refr: &[String], opts: &MeteorOptions<'_>) -> MatchAlignment {
    let mut cand_match: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_used = vec![false; refr.len()];

    let run_stage = |cand_match: &mut Vec<Option<usize>>,
                         ref_used: &mut Vec<bool>,
                         matches: &dyn Fn(&str, &str) -> bool| {
        for (i, c) in cand.iter().enumerate() {
            if cand_match[i].is_some() {
                continue;
            }
            for (j, r) in refr.iter().enumerate() {
                if !ref_used[j] && matches(c, r) {
                    cand_match[i] = Some(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };

    run_stage(&mut cand_match, &mut ref_used, &|c, r| c == r);
    if let Some(stemmer) = opts.stemmer {
        run_stage(&mut cand_match, &mut ref_used, &|c, r| {
            stemmer.stem(c) == stemmer.stem(r)
        });
    }
    if let Some(table) = opts.synonyms {
        run_stage(&mut cand_match, &mut ref_used, &|c, r| {
            table.get(c).map(|s| s.contains(r)).unwrap_or(false)
                || table.get(r).map(|s| s.contains(c)).unwrap_or(false)
        });
    }

    let pairs: Vec<(usize, usize)> = cand_match
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| (i, j)))
        .collect();
    let mut chunk_count = 0;
    for (k, pair) in pairs.iter().enumerate() {
        if k == 0 || pair.0 != pairs[k - 1].0 + 1 || pair.1 != pairs[k - 1].1 + 1 {
            chunk_count += 1;
        }
    }
    MatchAlignment { pairs, chunk_count }
}

/// METEOR with the original parameters: Fmean = 10PR/(R+9P), fragmentation
/// penalty 0.5·(chunks/m)^3. 0 when nothing matches.
pub fn meteor(candidate: &str, reference: &str) -> f64 {
    meteor_with(candidate, reference, &MeteorOptions::default())
}

pub fn meteor_with(candidate: &str, reference: &str, opts: &MeteorOptions<'_>) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let alignment = align(&cand, &refr, opts);
    let m = alignment.pairs.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let precision = m / cand.len() as f64;
    let recall = m / refr.len() as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (alignment.chunk_count as f64 / m).powi(3);
    fmean * (1.0 - penalty)
}

/// Per-token vectors for the semantic scorer. The live implementation goes
/// through the embedding backend; tests use a deterministic local encoder.
pub trait TokenEncoder {
    fn encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Deterministic hash-based token encoder (offline).
pub struct HashTokenEncoder {
    pub dim: usize,
}

impl HashTokenEncoder {
    pub fn new(dim: usize) -> HashTokenEncoder {
        HashTokenEncoder { dim: dim.max(2) }
    }
}

impl TokenEncoder for HashTokenEncoder {
    fn encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(tokens
            .iter()
            .map(|t| crate::gateway::HashEmbeddingBackend::new(self.dim).embed_one(t).values)
            .collect())
    }
}

/// Token encoder backed by the gateway's embedding endpoint.
pub struct EmbeddingTokenEncoder<'a> {
    pub gateway: &'a Gateway,
}

impl TokenEncoder for EmbeddingTokenEncoder<'_> {
    fn encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .gateway
            .embed("semantic", tokens)?
            .into_iter()
            .map(|v| v.values)
            .collect())
    }
}

/// Greedy matching score: precision is the mean over candidate tokens of
/// the maximum cosine to any reference token; recall is symmetric; the
/// result is their harmonic mean. P and R are clamped into [0, 1] so the
/// score range holds for arbitrary encoders.
pub fn semantic_score(
    candidate: &str,
    reference: &str,
    encoder: &dyn TokenEncoder,
) -> Result<f64> {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return Ok(0.0);
    }
    let cand_vecs = encoder.encode(&cand)?;
    let ref_vecs = encoder.encode(&refr)?;

    let best_against = |from: &[Vec<f64>], to: &[Vec<f64>]| -> Result<f64> {
        let mut total = 0.0;
        for v in from {
            let mut best = f64::NEG_INFINITY;
            for w in to {
                best = best.max(util::cosine(v, w)?);
            }
            total += best;
        }
        Ok((total / from.len() as f64).clamp(0.0, 1.0))
    };

    let precision = best_against(&cand_vecs, &ref_vecs)?;
    let recall = best_against(&ref_vecs, &cand_vecs)?;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Everything the score bundle needs: METEOR staging choices plus the
/// optional semantic token encoder.
#[derive(Default)]
pub struct ScoringOptions<'a> {
    pub meteor: MeteorOptions<'a>,
    pub encoder: Option<&'a dyn TokenEncoder>,
}

/// Bundle the three metrics. A failing or absent semantic backend degrades
/// that field to None; degenerate inputs score 0. Audit notes describe
/// anything unusual.
pub fn score(
    candidate: &str,
    reference: &str,
    encoder: Option<&dyn TokenEncoder>,
) -> (ScoreTriple, Vec<String>) {
    score_with(
        candidate,
        reference,
        &ScoringOptions {
            meteor: MeteorOptions::default(),
            encoder,
        },
    )
}

pub fn score_with(
    candidate: &str,
    reference: &str,
    opts: &ScoringOptions<'_>,
) -> (ScoreTriple, Vec<String>) {
    let mut audit = Vec::new();
    if tokenize(candidate).is_empty() || tokenize(reference).is_empty() {
        audit.push("empty-after-tokenization input; overlap metrics scored 0".to_string());
    }
    let rouge1 = Some(rouge1_f1(candidate, reference));
    let meteor_score = Some(meteor_with(candidate, reference, &opts.meteor));
    let semantic = match opts.encoder {
        None => {
            audit.push("semantic backend not configured; field absent".to_string());
            None
        }
        Some(encoder) => match semantic_score(candidate, reference, encoder) {
            Ok(v) => Some(v),
            Err(err) => {
                audit.push(format!("semantic scoring failed: {err}"));
                None
            }
        },
    };
    (
        ScoreTriple {
            rouge1,
            meteor: meteor_score,
            semantic,
        },
        audit,
    )
}
