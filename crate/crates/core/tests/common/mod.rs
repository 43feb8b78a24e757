//! Shared fixture builders: deterministic mock corpora and the scripted
//! backend entries that drive them offline.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aspectsum::config::{BookEntry, PipelineConfig};
use aspectsum::corpus::{chunk_text, Book, ChunkingConfig};
use aspectsum::gateway::BackendKind;
use aspectsum::qagen::DEFAULT_ASPECTS;
use aspectsum::summarize::ALL_METHODS;

const WORDS: [&str; 24] = [
    "harbor", "lantern", "voyage", "captain", "storm", "ledger", "secret", "council", "tide",
    "mast", "compass", "shadow", "bargain", "letter", "garden", "winter", "promise", "duel",
    "carriage", "manor", "orchard", "vigil", "ransom", "sermon",
];

/// Deterministic pseudo-prose of exactly `chars` scalar values.
pub fn book_text(seed: u64, chars: usize) -> String {
    let mut out = String::new();
    let mut n = seed;
    while out.chars().count() < chars + 16 {
        let len = 6 + (n % 7) as usize;
        let mut sentence = Vec::with_capacity(len);
        for k in 0..len {
            n = n.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut word = WORDS[(n >> 33) as usize % WORDS.len()].to_string();
            if k == 0 {
                let mut cs = word.chars();
                word = cs.next().unwrap().to_uppercase().chain(cs).collect();
            }
            sentence.push(word);
        }
        out.push_str(&sentence.join(" "));
        out.push_str(". ");
    }
    out.chars().take(chars).collect()
}

/// Fixed entity pairs used by the scripted extractions. Designed so three
/// edges accumulate importance >= 10 per book:
///   (ALPHA, BRAVO)  6 per chunk      -> 6 * n_chunks
///   (ALPHA, CARLA) 10 in chunk 0     -> 10
///   (CARLA, DELTA)  5 in chunks 0..2 -> 10
///   (BRAVO, CARLA)  4 in chunk 1     -> 4 (below threshold)
pub fn extraction_output(chunk_index: usize) -> String {
    let mut records = vec![
        r#"("entity"<|>"ALPHA"<|>"character"<|>"A ship captain holding the crew together")"#
            .to_string(),
        r#"("entity"<|>"BRAVO"<|>"character"<|>"The first mate and oldest friend of the captain")"#
            .to_string(),
        format!(
            r#"("relationship"<|>"ALPHA"<|>"BRAVO"<|>"Chunk {chunk_index}: the captain trusts the first mate with the ship"<|>"trust, command"<|>6)"#
        ),
    ];
    if chunk_index == 0 {
        records.push(
            r#"("entity"<|>"CARLA"<|>"character"<|>"A stowaway with a hidden ledger")"#.to_string(),
        );
        records.push(
            r#"("relationship"<|>"ALPHA"<|>"CARLA"<|>"The captain discovers the stowaway and demands the ledger"<|>"discovery, ledger"<|>10)"#.to_string(),
        );
    }
    if chunk_index == 1 {
        records.push(
            r#"("relationship"<|>"BRAVO"<|>"CARLA"<|>"The first mate distrusts the stowaway"<|>"distrust"<|>4)"#.to_string(),
        );
    }
    if chunk_index <= 1 {
        records.push(
            r#"("entity"<|>"DELTA"<|>"concept"<|>"The hidden ledger naming the conspirators")"#.to_string(),
        );
        records.push(
            r#"("relationship"<|>"CARLA"<|>"DELTA"<|>"The stowaway guards the ledger with her life"<|>"secrecy, ledger"<|>5)"#.to_string(),
        );
    }
    format!("{}<|COMPLETE|>", records.join("##"))
}

/// The three QA ids the fixture yields per book, in selection order.
pub fn fixture_qa_edges() -> Vec<(&'static str, &'static str, &'static str)> {
    // (qa_id, source, target) ordered by (importance desc, key asc):
    // ALPHA|BRAVO accumulates the most; the two ties at 10 order by key.
    vec![
        ("qa-0000", "ALPHA", "BRAVO"),
        ("qa-0001", "ALPHA", "CARLA"),
        ("qa-0002", "CARLA", "DELTA"),
    ]
}

pub fn qa_output(source: &str, target: &str) -> String {
    format!(
        "Question: What binds {source} and {target} in the story?\nAnswer: {source} and {target} are bound by trust and the hidden ledger through the voyage.\nKeywords: trust, ledger, voyage"
    )
}

pub fn leaf_summary(aspect: &str, index: usize) -> String {
    format!("Aspect {aspect} part {index}: the captain guards the ledger through the storm.")
}

pub fn merged_summary(aspect: &str, book_id: &str) -> String {
    format!(
        "A {aspect} reading of {book_id}: the captain, the first mate, and the stowaway carry the hidden ledger safely through the storm to harbor."
    )
}

pub fn scripted_answer(method: &str, qa_id: &str) -> String {
    format!("Bound by trust and the hidden ledger through the voyage ({method} {qa_id}).")
}

/// Add every chat-script entry one book needs for the full pipeline.
pub fn script_book(
    script: &mut BTreeMap<String, String>,
    book_id: &str,
    n_chunks: usize,
    aspects: &[String],
) {
    for i in 0..n_chunks {
        script.insert(
            format!("extract::{book_id}:chunk-{i}"),
            extraction_output(i),
        );
    }
    for (qa_id, source, target) in fixture_qa_edges() {
        script.insert(
            format!("qa::{book_id}:{source}|{target}"),
            qa_output(source, target),
        );
        let _ = qa_id;
    }
    for aspect in aspects {
        for i in 0..n_chunks {
            script.insert(
                format!("sum-hier-leaf::{book_id}:{aspect}:leaf-{i}"),
                leaf_summary(aspect, i),
            );
            script.insert(
                format!("sum-inc-update::{book_id}:{aspect}:U{i}"),
                format!("Running {aspect} summary after part {i}: the ledger stays hidden."),
            );
        }
        // Default merge budget fits all leaves in one batch.
        script.insert(
            format!("sum-hier-merge::{book_id}:{aspect}:L1:B0"),
            merged_summary(aspect, book_id),
        );
        script.insert(
            format!("sum-rag::{book_id}:{aspect}"),
            merged_summary(aspect, book_id),
        );
        for method in ALL_METHODS {
            for (qa_id, _, _) in fixture_qa_edges() {
                script.insert(
                    format!("answer::{method}:{book_id}:{aspect}:{qa_id}"),
                    scripted_answer(method, qa_id),
                );
            }
        }
    }
}

/// Script entries for GENERIC-mode summaries and for answering aspect QAs
/// from them (method labels gain a "-generic" suffix in that mode).
pub fn script_generic(
    script: &mut BTreeMap<String, String>,
    book_id: &str,
    n_chunks: usize,
    aspects: &[String],
) {
    for i in 0..n_chunks {
        script.insert(
            format!("sum-hier-leaf::{book_id}:GENERIC:leaf-{i}"),
            leaf_summary("GENERIC", i),
        );
        script.insert(
            format!("sum-inc-update::{book_id}:GENERIC:U{i}"),
            format!("Running plain summary after part {i}: the ledger stays hidden."),
        );
    }
    script.insert(
        format!("sum-hier-merge::{book_id}:GENERIC:L1:B0"),
        merged_summary("GENERIC", book_id),
    );
    script.insert(
        format!("sum-rag::{book_id}:GENERIC"),
        merged_summary("GENERIC", book_id),
    );
    for method in ALL_METHODS {
        for aspect in aspects {
            for (qa_id, _, _) in fixture_qa_edges() {
                script.insert(
                    format!("answer::{method}-generic:{book_id}:{aspect}:{qa_id}"),
                    format!("A plain retelling mentioning the ledger ({method} {qa_id})."),
                );
            }
        }
    }
}

pub struct Fixture {
    pub config_path: PathBuf,
    pub config: PipelineConfig,
    pub books: Vec<(String, usize)>, // (id, n_chunks)
}

/// Write a 3-book mock corpus (5, 4, and 3 chunks), its chat script, and a
/// pipeline config into `dir`.
pub fn build_e2e_fixture(dir: &Path) -> Fixture {
    let chunking = ChunkingConfig::default();
    let specs = [("voyage", 5200usize, 11u64), ("ledger", 4000, 23), ("harbor", 3000, 47)];
    let aspects: Vec<String> = DEFAULT_ASPECTS.iter().map(|s| s.to_string()).collect();

    let mut script = BTreeMap::new();
    let mut entries = Vec::new();
    let mut books = Vec::new();
    for (id, chars, seed) in specs {
        let text = book_text(seed, chars);
        let path = dir.join(format!("{id}.txt"));
        std::fs::write(&path, &text).unwrap();
        let book = Book::from_text(id, id, &text);
        let n_chunks = chunk_text(&book, &chunking).unwrap().len();
        assert!(n_chunks <= 5, "fixture book {id} has {n_chunks} chunks");
        script_book(&mut script, id, n_chunks, &aspects);
        script_generic(&mut script, id, n_chunks, &aspects);
        entries.push(BookEntry {
            id: id.to_string(),
            title: Some(format!("The {id}")),
            path,
        });
        books.push((id.to_string(), n_chunks));
    }

    let script_path = dir.join("mock_script.json");
    std::fs::write(&script_path, serde_json::to_string_pretty(&script).unwrap()).unwrap();

    let mut config = PipelineConfig {
        books: entries,
        output_dir: dir.join("out"),
        ..PipelineConfig::default()
    };
    config.gateway.backend = BackendKind::Mock;
    config.gateway.mock_script = Some(script_path);

    let config_path = dir.join("aspectsum.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();
    Fixture {
        config_path,
        config,
        books,
    }
}
