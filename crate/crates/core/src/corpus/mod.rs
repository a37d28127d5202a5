//! Parallel corpora and bilingual lexica: loading, validation, partitioning
//! and leakage detection.

mod books;
mod io;
mod partition;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use books::canonical_book;
pub use io::{load_lexicon, load_parallel, parse_lexicon, parse_parallel, write_lexicon, write_parallel, CorpusFormat};
pub use partition::{leakage_check, partition, Collision, LeakageReport, Partition, PartitionSpec};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: field `{field}`: {message}")]
    Malformed { line: usize, field: &'static str, message: String },
    #[error("empty {field} at line {line}")]
    EmptyField { field: &'static str, line: usize },
    #[error("duplicate id `{id}` on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },
    #[error("duplicate lexicon entry ({source_word}, {pos}, {target_word}) on lines {first} and {second}")]
    DuplicateEntry { source_word: String, pos: String, target_word: String, first: usize, second: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Book/chapter/verse identity of a Bible verse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VerseRef {
    pub book: String,
    pub chapter: u32,
    pub verse: u32,
}

impl VerseRef {
    pub fn new(book: impl Into<String>, chapter: u32, verse: u32) -> Result<Self, String> {
        let book = book.into();
        if book.trim().is_empty() {
            return Err("empty book".into());
        }
        if chapter == 0 || verse == 0 {
            return Err(format!("chapter and verse must be >= 1, got {chapter}:{verse}"));
        }
        Ok(Self { book, chapter, verse })
    }

    /// Parses `BOOK.CHAPTER.VERSE`, ignoring any trailing segment suffix
    /// (`GEN.1.1.2` names the second sentence of GEN 1:1).
    pub fn parse_dotted(s: &str) -> Option<Self> {
        let mut parts = s.trim().split('.');
        let book = parts.next()?;
        let chapter = parts.next()?.parse().ok()?;
        let verse = parts.next()?.parse().ok()?;
        Self::new(book, chapter, verse).ok()
    }

    pub fn dotted(&self) -> String {
        format!("{}.{}.{}", self.book, self.chapter, self.verse)
    }
}

impl fmt::Display for VerseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{}", self.book, self.chapter, self.verse)
    }
}

impl TryFrom<String> for VerseRef {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Self::parse_dotted(&s).ok_or_else(|| format!("expected BOOK.CHAPTER.VERSE, got `{s}`"))
    }
}

impl From<VerseRef> for String {
    fn from(r: VerseRef) -> String {
        r.dotted()
    }
}

/// Provenance of a parallel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "NT")]
    NewTestament,
    #[serde(rename = "OT")]
    OldTestament,
    #[serde(rename = "GRAMMAR")]
    Grammar,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::NewTestament => "NT",
            Origin::OldTestament => "OT",
            Origin::Grammar => "GRAMMAR",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NT" => Ok(Origin::NewTestament),
            "OT" => Ok(Origin::OldTestament),
            "GRAMMAR" => Ok(Origin::Grammar),
            other => Err(format!("unknown origin `{other}` (expected NT, OT or GRAMMAR)")),
        }
    }
}

/// One aligned English/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    #[serde(rename = "source")]
    pub source_text: String,
    #[serde(rename = "target")]
    pub target_text: String,
    pub origin: Origin,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub verse_ref: Option<VerseRef>,
}

impl ParallelPair {
    /// Builds a validated pair. When `verse_ref` is `None` the id is tried
    /// as a dotted verse reference.
    pub fn new(
        id: impl Into<String>,
        source_text: impl Into<String>,
        target_text: impl Into<String>,
        origin: Origin,
        verse_ref: Option<VerseRef>,
    ) -> Result<Self, (&'static str, String)> {
        let pair =
            Self { id: id.into(), source_text: source_text.into(), target_text: target_text.into(), origin, verse_ref };
        pair.validate()?;
        Ok(pair.with_inferred_ref())
    }

    fn with_inferred_ref(mut self) -> Self {
        if self.verse_ref.is_none() {
            self.verse_ref = VerseRef::parse_dotted(&self.id);
        }
        self
    }

    /// Returns the offending field name and a message on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.id.trim().is_empty() {
            return Err(("id", "empty id".into()));
        }
        if self.source_text.trim().is_empty() {
            return Err(("source_text", "empty source_text".into()));
        }
        if self.target_text.trim().is_empty() {
            return Err(("target_text", "empty target_text".into()));
        }
        Ok(())
    }
}

/// A bilingual glossary entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub source_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    pub target_word: String,
}

impl LexiconEntry {
    pub fn new(source_word: impl Into<String>, pos: Option<&str>, target_word: impl Into<String>) -> Self {
        Self {
            source_word: source_word.into(),
            pos: pos.map(str::to_string).filter(|p| !p.trim().is_empty()),
            target_word: target_word.into(),
        }
    }
}

/// Which pairs make up the retrieval pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RetrievalCorpus {
    #[serde(rename = "nt", alias = "NT")]
    NewTestament,
    #[default]
    #[serde(rename = "nt+grammar", alias = "NT_PLUS_GRAMMAR")]
    NewTestamentPlusGrammar,
}

impl RetrievalCorpus {
    pub fn includes(self, origin: Origin) -> bool {
        match self {
            RetrievalCorpus::NewTestament => origin == Origin::NewTestament,
            RetrievalCorpus::NewTestamentPlusGrammar => {
                matches!(origin, Origin::NewTestament | Origin::Grammar)
            }
        }
    }
}

impl FromStr for RetrievalCorpus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nt" => Ok(Self::NewTestament),
            "nt+grammar" | "nt_plus_grammar" => Ok(Self::NewTestamentPlusGrammar),
            other => Err(format!("unknown retrieval corpus `{other}` (expected nt or nt+grammar)")),
        }
    }
}

/// Immutable set of pairs and lexicon entries with store-wide unique ids.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    pairs: Vec<ParallelPair>,
    lexicon: Vec<LexiconEntry>,
}

impl CorpusStore {
    pub fn new(pairs: Vec<ParallelPair>, lexicon: Vec<LexiconEntry>) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, pair) in pairs.iter().enumerate() {
            pair.validate().map_err(|(field, message)| CorpusError::Malformed { line: i + 1, field, message })?;
            if let Some(first) = seen.insert(pair.id.as_str(), i + 1) {
                return Err(CorpusError::DuplicateId { id: pair.id.clone(), first, second: i + 1 });
            }
        }
        Ok(Self { pairs, lexicon })
    }

    pub fn pairs(&self) -> &[ParallelPair] {
        &self.pairs
    }

    pub fn lexicon(&self) -> &[LexiconEntry] {
        &self.lexicon
    }

    /// Pairs eligible for retrieval under the given pool composition.
    pub fn pool(&self, corpus: RetrievalCorpus) -> Vec<ParallelPair> {
        self.pairs.iter().filter(|p| corpus.includes(p.origin)).cloned().collect()
    }
}

/// Hex SHA-256 over the pairs' ids and texts, in order.
pub fn content_hash(pairs: &[ParallelPair]) -> String {
    let mut hasher = Sha256::new();
    for p in pairs {
        for field in [p.id.as_str(), &p.source_text, &p.target_text, p.origin.as_str()] {
            hasher.update(field.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([1u8]);
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verse_ref_round_trips_through_dotted_form() {
        let r = VerseRef::parse_dotted("GEN.1.1").unwrap();
        assert_eq!(r.to_string(), "GEN 1:1");
        assert_eq!(r.dotted(), "GEN.1.1");
        assert_eq!(VerseRef::parse_dotted("GEN.3.15.2").unwrap().verse, 15);
    }

    #[test]
    fn verse_ref_rejects_zero_and_empty() {
        assert!(VerseRef::parse_dotted("GEN.0.1").is_none());
        assert!(VerseRef::parse_dotted("GEN.1.0").is_none());
        assert!(VerseRef::parse_dotted(".1.1").is_none());
        assert!(VerseRef::parse_dotted("grammar-17").is_none());
    }

    #[test]
    fn pair_infers_ref_from_id() {
        let p = ParallelPair::new("GEN.1.1", "In the beginning", "Pa petari", Origin::OldTestament, None).unwrap();
        assert_eq!(p.verse_ref, Some(VerseRef::new("GEN", 1, 1).unwrap()));
    }

    #[test]
    fn pair_rejects_whitespace_text() {
        let err = ParallelPair::new("x", "a", "   ", Origin::Grammar, None).unwrap_err();
        assert_eq!(err.0, "target_text");
    }

    #[test]
    fn store_rejects_duplicate_ids() {
        let a = ParallelPair::new("a", "x", "y", Origin::Grammar, None).unwrap();
        let err = CorpusStore::new(vec![a.clone(), a], vec![]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { first: 1, second: 2, .. }));
    }

    #[test]
    fn pool_respects_composition() {
        let nt = ParallelPair::new("MAT.1.1", "a", "b", Origin::NewTestament, None).unwrap();
        let gr = ParallelPair::new("g1", "a", "b", Origin::Grammar, None).unwrap();
        let ot = ParallelPair::new("GEN.1.1", "a", "b", Origin::OldTestament, None).unwrap();
        let store = CorpusStore::new(vec![nt, gr, ot], vec![]).unwrap();
        assert_eq!(store.pool(RetrievalCorpus::NewTestament).len(), 1);
        assert_eq!(store.pool(RetrievalCorpus::NewTestamentPlusGrammar).len(), 2);
    }
}
