//! Book ingestion and character-window chunking.
//!
//! Books are plain UTF-8 text. Line endings are normalized to LF before any
//! offsets are computed, so chunk spans are reproducible across platforms.
//! Offsets count Unicode scalar values, not bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word-count grouping for result breakdowns. Books whose counts fall
/// between the defined ranges are reported separately as `Unclassified`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeBucket {
    Small,
    Middle,
    Large,
    Unclassified,
}

impl SizeBucket {
    /// Small: < 20k words. Middle: 90k–110k. Large: > 200k.
    pub fn from_word_count(word_count: usize) -> SizeBucket {
        if word_count < 20_000 {
            SizeBucket::Small
        } else if (90_000..=110_000).contains(&word_count) {
            SizeBucket::Middle
        } else if word_count > 200_000 {
            SizeBucket::Large
        } else {
            SizeBucket::Unclassified
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Middle => "middle",
            SizeBucket::Large => "large",
            SizeBucket::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Book {
    pub id: String,
    pub title: String,
    pub text: String,
    pub word_count: usize,
    pub size_bucket: SizeBucket,
}

impl Book {
    /// Build a book from already-loaded text: normalizes line endings and
    /// derives word count and size bucket.
    pub fn from_text(id: impl Into<String>, title: impl Into<String>, text: &str) -> Book {
        let text = normalize_line_endings(text);
        let word_count = text.split_whitespace().count();
        Book {
            id: id.into(),
            title: title.into(),
            text,
            word_count,
            size_bucket: SizeBucket::from_word_count(word_count),
        }
    }
}

/// One manifest row of the persisted book registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub title: String,
    pub path: PathBuf,
    pub word_count: usize,
    pub size_bucket: SizeBucket,
}

/// A character window of a book; the extraction unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub book_id: String,
    pub index: usize,
    /// Start offset in Unicode scalar values, inclusive.
    pub start: usize,
    /// End offset in Unicode scalar values, exclusive.
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChunkingConfig {
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
}

fn default_chunk_size() -> usize {
    1200
}

fn default_overlap() -> usize {
    100
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            chunk_size: default_chunk_size(),
            overlap: default_overlap(),
        }
    }
}

impl ChunkingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::Config("chunk_size must be positive".into()));
        }
        if self.overlap >= self.chunk_size {
            return Err(Error::Config(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> usize {
        self.chunk_size - self.overlap
    }
}

fn normalize_line_endings(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Load a book from a plain-text file. Bytes that do not decode as UTF-8
/// fail with the offending byte offset. The title defaults to the file stem.
pub fn ingest_book(path: &Path, id: &str) -> Result<Book> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        detail: format!(
            "invalid UTF-8 at byte offset {}",
            e.utf8_error().valid_up_to()
        ),
    })?;
    let title = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| id.to_string());
    Ok(Book::from_text(id, title, &text))
}

/// Split a book into fixed-size overlapping character windows.
///
/// Starts are 0, s, 2s, ... with s = chunk_size − overlap. Emission stops as
/// soon as a chunk reaches the end of the text, so the count is exactly
/// 1 when len ≤ chunk_size and ceil((len − chunk_size)/s) + 1 otherwise.
pub fn chunk_text(book: &Book, cfg: &ChunkingConfig) -> Result<Vec<Chunk>> {
    cfg.validate()?;
    if book.text.is_empty() {
        return Err(Error::InvalidInput(format!(
            "book {:?} has empty text; nothing to chunk",
            book.id
        )));
    }

    // Byte offset of every char, plus the terminal byte length, so char
    // spans can be sliced without re-scanning.
    let mut byte_at: Vec<usize> = book.text.char_indices().map(|(b, _)| b).collect();
    byte_at.push(book.text.len());
    let char_len = byte_at.len() - 1;

    let step = cfg.step();
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + cfg.chunk_size).min(char_len);
        chunks.push(Chunk {
            book_id: book.id.clone(),
            index: chunks.len(),
            start,
            end,
            text: book.text[byte_at[start]..byte_at[end]].to_string(),
        });
        if end == char_len {
            break;
        }
        start += step;
    }
    Ok(chunks)
}

/// Closed-form chunk count for a text of `char_len` scalar values.
pub fn expected_chunk_count(char_len: usize, cfg: &ChunkingConfig) -> usize {
    if char_len <= cfg.chunk_size {
        1
    } else {
        (char_len - cfg.chunk_size).div_ceil(cfg.step()) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book(text: &str) -> Book {
        Book::from_text("b", "b", text)
    }

    #[test]
    fn word_count_and_bucket() {
        let b = Book::from_text("b", "b", "a b c");
        assert_eq!(b.word_count, 3);
        assert_eq!(b.size_bucket, SizeBucket::Small);

        assert_eq!(SizeBucket::from_word_count(250_000), SizeBucket::Large);
        assert_eq!(SizeBucket::from_word_count(200_001), SizeBucket::Large);
        assert_eq!(SizeBucket::from_word_count(200_000), SizeBucket::Unclassified);
        assert_eq!(SizeBucket::from_word_count(90_000), SizeBucket::Middle);
        assert_eq!(SizeBucket::from_word_count(110_000), SizeBucket::Middle);
        // Falls in none of the three defined ranges.
        assert_eq!(SizeBucket::from_word_count(50_000), SizeBucket::Unclassified);
        assert_eq!(SizeBucket::from_word_count(19_999), SizeBucket::Small);
    }

    #[test]
    fn line_endings_normalized_before_counting() {
        let b = Book::from_text("b", "b", "one\r\ntwo\rthree\n");
        assert_eq!(b.text, "one\ntwo\nthree\n");
        assert_eq!(b.word_count, 3);
    }

    #[test]
    fn ingest_reports_bad_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, [b'o', b'k', 0xff, 0xfe]).unwrap();
        let err = ingest_book(&path, "bad").unwrap_err();
        assert!(err.to_string().contains("byte offset 2"), "{err}");
    }

    #[test]
    fn ingest_reads_utf8_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emma.txt");
        std::fs::write(&path, "a b c").unwrap();
        let b = ingest_book(&path, "emma").unwrap();
        assert_eq!(b.word_count, 3);
        assert_eq!(b.title, "emma");
        assert_eq!(b.size_bucket, SizeBucket::Small);
    }

    #[test]
    fn spans_match_worked_example() {
        let text: String = std::iter::repeat('x').take(3000).collect();
        let cfg = ChunkingConfig::default();
        let chunks = chunk_text(&book(&text), &cfg).unwrap();
        let spans: Vec<(usize, usize)> = chunks.iter().map(|c| (c.start, c.end)).collect();
        assert_eq!(spans, vec![(0, 1200), (1100, 2300), (2200, 3000)]);
    }

    #[test]
    fn short_text_single_chunk() {
        let text: String = std::iter::repeat('x').take(800).collect();
        let chunks = chunk_text(&book(&text), &ChunkingConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].start, chunks[0].end), (0, 800));
    }

    #[test]
    fn empty_text_errors() {
        assert!(chunk_text(&book(""), &ChunkingConfig::default()).is_err());
    }

    #[test]
    fn invalid_overlap_rejected() {
        let cfg = ChunkingConfig {
            chunk_size: 100,
            overlap: 100,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        // é is 2 bytes but 1 scalar value.
        let text: String = std::iter::repeat('é').take(1500).collect();
        let cfg = ChunkingConfig::default();
        let chunks = chunk_text(&book(&text), &cfg).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].text.chars().count(), 1200);
        assert_eq!((chunks[1].start, chunks[1].end), (1100, 1500));
    }

    #[test]
    fn exact_step_multiple_matches_count_formula() {
        // len − chunk_size is an exact multiple of the step: the trailing
        // start < len would be fully covered; it must not be emitted.
        let text: String = std::iter::repeat('x').take(2300).collect();
        let cfg = ChunkingConfig::default();
        let chunks = chunk_text(&book(&text), &cfg).unwrap();
        assert_eq!(chunks.len(), expected_chunk_count(2300, &cfg));
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks.last().unwrap().end, 2300);
    }

    #[test]
    fn reassembly_reproduces_text() {
        let text: String = (0..5000).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let cfg = ChunkingConfig {
            chunk_size: 700,
            overlap: 150,
        };
        let chunks = chunk_text(&book(&text), &cfg).unwrap();
        let mut rebuilt = String::new();
        for (i, c) in chunks.iter().enumerate() {
            if i + 1 == chunks.len() {
                rebuilt.push_str(&c.text);
            } else {
                let prefix: String = c.text.chars().take(cfg.step()).collect();
                rebuilt.push_str(&prefix);
            }
        }
        assert_eq!(rebuilt, text);
    }
}
