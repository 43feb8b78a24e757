//! Per-chunk entity/relation extraction and the tolerant parser for the
//! model's delimited output.
//!
//! Wire format: records separated by `##`, fields by `<|>`, stream
//! terminated by `<|COMPLETE|>`. The first field names the record kind
//! ("entity" or "relationship"). Parsing is total: malformed records are
//! skipped and counted, never fatal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway, PromptTemplate};
use crate::prompts::{COMPLETION_MARKER, FIELD_DELIMITER, RECORD_DELIMITER};

/// (book_id, chunk index) provenance of an observation.
pub type SourceChunk = (String, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    /// Canonical name: trimmed, whitespace-collapsed, uppercased.
    pub name: String,
    pub entity_type: String,
    pub description: String,
    pub source_chunk: SourceChunk,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub source: String,
    pub target: String,
    pub description: String,
    /// Deduplicated, lowercased.
    pub keywords: Vec<String>,
    /// In [1, 10].
    pub importance: u32,
    pub source_chunk: SourceChunk,
}

/// Trim, collapse internal whitespace, uppercase. Idempotent.
pub fn canonical_name(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_uppercase()
}

/// Split, trim, lowercase, deduplicate a comma-separated keyword list,
/// preserving first-seen order.
pub fn parse_keywords(raw: &str) -> Vec<String> {
    let mut seen = Vec::new();
    for part in raw.split(',') {
        let kw = part.trim().to_lowercase();
        if !kw.is_empty() && !seen.contains(&kw) {
            seen.push(kw);
        }
    }
    seen
}

#[derive(Debug, Default)]
pub struct ParsedRecords {
    pub entities: Vec<EntityRecord>,
    pub relations: Vec<RelationRecord>,
    pub skipped: usize,
}

/// Parse one model output into entity and relation records. Never fails;
/// pieces that look like records but do not validate are counted in
/// `skipped`, pieces with no field delimiter at all are ignored as noise.
pub fn parse_records(raw: &str, source_chunk: &SourceChunk) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    let body = raw.replace(COMPLETION_MARKER, "");
    for piece in body.split(RECORD_DELIMITER) {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        if !piece.contains(FIELD_DELIMITER) {
            continue; // prose or stray text, not a record
        }
        let inner = piece
            .trim_start_matches('(')
            .trim_end_matches(')')
            .trim();
        let fields: Vec<String> = inner
            .split(FIELD_DELIMITER)
            .map(|f| f.trim().trim_matches('"').trim().to_string())
            .collect();
        let kind = fields[0].to_lowercase();
        match kind.as_str() {
            "entity" => match parse_entity(&fields, source_chunk) {
                Some(e) => out.entities.push(e),
                None => out.skipped += 1,
            },
            "relationship" | "relation" => match parse_relation(&fields, source_chunk) {
                Some(r) => out.relations.push(r),
                None => out.skipped += 1,
            },
            _ => out.skipped += 1,
        }
    }
    out
}

fn parse_entity(fields: &[String], source_chunk: &SourceChunk) -> Option<EntityRecord> {
    if fields.len() != 4 {
        return None;
    }
    let name = canonical_name(&fields[1]);
    let description = fields[3].trim().to_string();
    if name.is_empty() || description.is_empty() {
        return None;
    }
    Some(EntityRecord {
        name,
        entity_type: fields[2].trim().to_lowercase(),
        description,
        source_chunk: source_chunk.clone(),
    })
}

fn parse_relation(fields: &[String], source_chunk: &SourceChunk) -> Option<RelationRecord> {
    if fields.len() != 6 {
        return None;
    }
    let source = canonical_name(&fields[1]);
    let target = canonical_name(&fields[2]);
    let description = fields[3].trim().to_string();
    let keywords = parse_keywords(&fields[4]);
    let importance: u32 = fields[5].parse().ok()?;
    if source.is_empty()
        || target.is_empty()
        || source == target
        || description.is_empty()
        || keywords.is_empty()
        || !(1..=10).contains(&importance)
    {
        return None;
    }
    Some(RelationRecord {
        source,
        target,
        description,
        keywords,
        importance,
        source_chunk: source_chunk.clone(),
    })
}

/// Re-serialize records in the wire format (used by round-trip checks and
/// fixture builders).
pub fn serialize_records(entities: &[EntityRecord], relations: &[RelationRecord]) -> String {
    let mut records = Vec::new();
    for e in entities {
        records.push(format!(
            "(\"entity\"{d}\"{}\"{d}\"{}\"{d}\"{}\")",
            e.name,
            e.entity_type,
            e.description,
            d = FIELD_DELIMITER
        ));
    }
    for r in relations {
        records.push(format!(
            "(\"relationship\"{d}\"{}\"{d}\"{}\"{d}\"{}\"{d}\"{}\"{d}{})",
            r.source,
            r.target,
            r.description,
            r.keywords.join(", "),
            r.importance,
            d = FIELD_DELIMITER
        ));
    }
    format!("{}{}", records.join(RECORD_DELIMITER), COMPLETION_MARKER)
}

/// Outcome of extracting one chunk.
#[derive(Debug)]
pub struct ChunkExtraction {
    pub chunk_index: usize,
    pub entities: Vec<EntityRecord>,
    pub relations: Vec<RelationRecord>,
    pub skipped: usize,
    /// Raw model output, kept for the audit trail.
    pub raw: String,
}

/// Run the extraction prompt on one chunk and parse the reply. A reply that
/// yields no records and no skips despite non-empty content is treated as
/// wholly unparseable and carries the raw text for audit.
pub fn extract_chunk(
    chunk: &Chunk,
    gateway: &Gateway,
    template: &PromptTemplate,
) -> Result<ChunkExtraction> {
    let mut bindings = BTreeMap::new();
    bindings.insert("input_text", chunk.text.clone());
    let user = template.render(&bindings)?;
    let req = ChatRequest::new(
        "extract",
        format!("{}:chunk-{}", chunk.book_id, chunk.index),
        "You extract entities and relationships from fiction passages.",
        user,
    );
    let outcome = gateway.chat(&req)?;
    let source = (chunk.book_id.clone(), chunk.index);
    let parsed = parse_records(&outcome.text, &source);
    let trimmed = outcome.text.replace(COMPLETION_MARKER, "");
    if parsed.entities.is_empty()
        && parsed.relations.is_empty()
        && parsed.skipped == 0
        && !trimmed.trim().is_empty()
    {
        return Err(Error::Unparseable {
            context: format!("extraction of {}:chunk-{}", chunk.book_id, chunk.index),
            raw: outcome.text,
        });
    }
    Ok(ChunkExtraction {
        chunk_index: chunk.index,
        entities: parsed.entities,
        relations: parsed.relations,
        skipped: parsed.skipped,
        raw: outcome.text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> SourceChunk {
        ("book".to_string(), 0)
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let once = canonical_name("  emma   woodhouse ");
        assert_eq!(once, "EMMA WOODHOUSE");
        assert_eq!(canonical_name(&once), once);
    }

    #[test]
    fn parses_worked_example() {
        let raw = r#"("entity"<|>"EMMA"<|>"character"<|>"Protagonist of the novel")##("relationship"<|>"EMMA"<|>"KNIGHTLEY"<|>"Longtime friends who correct each other"<|>"friendship, counsel"<|>8)<|COMPLETE|>"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.entities.len(), 1);
        assert_eq!(parsed.relations.len(), 1);
        assert_eq!(parsed.skipped, 0);
        let rel = &parsed.relations[0];
        assert_eq!(rel.importance, 8);
        assert_eq!(rel.keywords, vec!["friendship", "counsel"]);
        assert_eq!(parsed.entities[0].name, "EMMA");
    }

    #[test]
    fn empty_string_yields_nothing() {
        let parsed = parse_records("", &src());
        assert_eq!(
            (parsed.entities.len(), parsed.relations.len(), parsed.skipped),
            (0, 0, 0)
        );
    }

    #[test]
    fn arity_violation_is_skipped() {
        let raw = r#"("relationship"<|>"A"<|>"B")"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.skipped, 1);
        assert!(parsed.relations.is_empty());
    }

    #[test]
    fn out_of_range_importance_is_skipped() {
        let raw = r#"("relationship"<|>"A"<|>"B"<|>"desc"<|>"kw"<|>eleven)##("relationship"<|>"A"<|>"B"<|>"desc"<|>"kw"<|>11)##("relationship"<|>"A"<|>"B"<|>"desc"<|>"kw"<|>0)"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.skipped, 3);
        assert!(parsed.relations.is_empty());
    }

    #[test]
    fn importance_in_range_is_kept() {
        let raw = r#"("relationship"<|>"A"<|>"B"<|>"desc"<|>"kw"<|>7)"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.relations[0].importance, 7);
        assert!((1..=10).contains(&parsed.relations[0].importance));
    }

    #[test]
    fn self_relation_is_skipped() {
        let raw = r#"("relationship"<|>"A"<|>"a "<|>"desc"<|>"kw"<|>5)"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn keywords_deduplicated_and_lowercased() {
        let raw = r#"("relationship"<|>"A"<|>"B"<|>"desc"<|>"Trust, TRUST, loyalty"<|>5)"#;
        let parsed = parse_records(raw, &src());
        assert_eq!(parsed.relations[0].keywords, vec!["trust", "loyalty"]);
    }

    #[test]
    fn prose_noise_is_ignored_not_skipped() {
        let parsed = parse_records("Sure, here are the records:", &src());
        assert_eq!(
            (parsed.entities.len(), parsed.relations.len(), parsed.skipped),
            (0, 0, 0)
        );
    }

    #[test]
    fn parse_serialize_parse_is_fixed_point() {
        let raw = r#"("entity"<|>"EMMA"<|>"character"<|>"Protagonist")##("relationship"<|>"EMMA"<|>"KNIGHTLEY"<|>"Friends"<|>"friendship"<|>8)<|COMPLETE|>"#;
        let first = parse_records(raw, &src());
        let serialized = serialize_records(&first.entities, &first.relations);
        let second = parse_records(&serialized, &src());
        assert_eq!(first.entities, second.entities);
        assert_eq!(first.relations, second.relations);
    }

    #[test]
    fn extract_chunk_maps_mock_output() {
        use crate::gateway::{HashEmbeddingBackend, MockChatBackend};
        use std::sync::Arc;

        let chunk = Chunk {
            book_id: "vanity".into(),
            index: 0,
            start: 0,
            end: 10,
            text: "some text.".into(),
        };
        let mut script = BTreeMap::new();
        script.insert(
            "extract::vanity:chunk-0".to_string(),
            r#"("entity"<|>"A"<|>"character"<|>"First")##("entity"<|>"B"<|>"character"<|>"Second")##("relationship"<|>"A"<|>"B"<|>"Allies"<|>"alliance"<|>6)<|COMPLETE|>"#
                .to_string(),
        );
        let gw = Gateway::new(
            Arc::new(MockChatBackend::new(script)),
            Arc::new(HashEmbeddingBackend::new(8)),
            1,
            0,
        );
        let extraction = extract_chunk(&chunk, &gw, &crate::prompts::extraction()).unwrap();
        assert_eq!(extraction.entities.len(), 2);
        assert_eq!(extraction.relations.len(), 1);
        assert_eq!(extraction.skipped, 0);
    }

    #[test]
    fn extract_chunk_flags_wholly_unparseable_output() {
        use crate::gateway::{HashEmbeddingBackend, MockChatBackend};
        use std::sync::Arc;

        let chunk = Chunk {
            book_id: "b".into(),
            index: 1,
            start: 0,
            end: 4,
            text: "text".into(),
        };
        let mut script = BTreeMap::new();
        script.insert(
            "extract::b:chunk-1".to_string(),
            "I am sorry, I cannot do that.".to_string(),
        );
        let gw = Gateway::new(
            Arc::new(MockChatBackend::new(script)),
            Arc::new(HashEmbeddingBackend::new(8)),
            1,
            0,
        );
        let err = extract_chunk(&chunk, &gw, &crate::prompts::extraction()).unwrap_err();
        match err {
            Error::Unparseable { raw, .. } => assert!(raw.contains("sorry")),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn skipped_records_do_not_abort_extraction() {
        use crate::gateway::{HashEmbeddingBackend, MockChatBackend};
        use std::sync::Arc;

        let chunk = Chunk {
            book_id: "b".into(),
            index: 2,
            start: 0,
            end: 4,
            text: "text".into(),
        };
        let mut script = BTreeMap::new();
        script.insert(
            "extract::b:chunk-2".to_string(),
            r#"("entity"<|>"A"<|>"character"<|>"First")##("relationship"<|>"A"<|>"B"<|>"d"<|>"kw"<|>eleven)<|COMPLETE|>"#
                .to_string(),
        );
        let gw = Gateway::new(
            Arc::new(MockChatBackend::new(script)),
            Arc::new(HashEmbeddingBackend::new(8)),
            1,
            0,
        );
        let extraction = extract_chunk(&chunk, &gw, &crate::prompts::extraction()).unwrap();
        assert_eq!(extraction.entities.len(), 1);
        assert_eq!(extraction.relations.len(), 0);
        assert_eq!(extraction.skipped, 1);
    }
}
