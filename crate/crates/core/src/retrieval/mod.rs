//! In-context example and glossary retrieval over the English side of a
//! parallel pool.
//!
//! Four sentence strategies are provided: BM25 ([`Bm25Index`]), cosine
//! similarity over embeddings ([`EmbeddingIndex`]), greedy character n-gram
//! selection with counterweighting ([`ChrfCwIndex`]), and per-word fuzzy
//! matching ([`WordIndex`]) whose result size grows with the query length.
//! Every ranking breaks score ties by ascending pair id.

mod bm25;
mod chrf_cw;
mod dense;
mod fuzzy;
mod levenshtein;
mod lexicon;
mod persist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ParallelPair;

pub use bm25::{Bm25Index, Bm25Params};
pub use chrf_cw::{CharNgramProfile, ChrfCwIndex, ChrfCwParams};
pub use dense::{normalize, EmbeddingIndex};
pub use fuzzy::{WordIndex, SIMILARITY_THRESHOLD};
pub use levenshtein::{levenshtein, normalized_levenshtein};
pub use lexicon::{lexicon_full, lexicon_fuzzy_retrieve, RetrievedLexicon};
pub use persist::{load_index, save_index, IndexKey, INDEX_FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("index is empty")]
    EmptyIndex,
    #[error("query is empty")]
    EmptyQuery,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{pairs} pairs but {vectors} embedding vectors")]
    RowCount { pairs: usize, vectors: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index file {path}: {message}")]
    Persist { path: std::path::PathBuf, message: String },
}

/// Where a retrieved example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "bm25")]
    Bm25,
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "chrf-cw")]
    ChrfCw,
    #[serde(rename = "fuzzy-word")]
    FuzzyWord,
    /// Fixed examples shared by every sentence (few-shot baselines).
    #[serde(rename = "static")]
    Static,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bm25 => "bm25",
            Strategy::Dense => "dense",
            Strategy::ChrfCw => "chrf-cw",
            Strategy::FuzzyWord => "fuzzy-word",
            Strategy::Static => "static",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bm25" => Ok(Strategy::Bm25),
            "dense" => Ok(Strategy::Dense),
            "chrf-cw" | "chrf" => Ok(Strategy::ChrfCw),
            "fuzzy-word" | "word" => Ok(Strategy::FuzzyWord),
            "static" => Ok(Strategy::Static),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// A parallel pair chosen as an in-context example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedExample {
    pub pair: ParallelPair,
    pub score: f64,
    pub strategy: Strategy,
    /// Query word that retrieved the pair; set only for fuzzy-word retrieval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_token: Option<String>,
}

impl RetrievedExample {
    pub fn new(pair: ParallelPair, score: f64, strategy: Strategy) -> Self {
        debug_assert!(score.is_finite());
        debug_assert!(strategy != Strategy::FuzzyWord);
        Self { pair, score, strategy, matched_token: None }
    }

    pub fn fuzzy(pair: ParallelPair, score: f64, matched_token: String) -> Self {
        Self { pair, score, strategy: Strategy::FuzzyWord, matched_token: Some(matched_token) }
    }
}

/// Sorts by score descending then pair id ascending and keeps `k`.
pub(crate) fn rank_top_k<'a>(
    scored: impl Iterator<Item = (&'a ParallelPair, f64)>,
    k: usize,
) -> Vec<(&'a ParallelPair, f64)> {
    let mut all: Vec<_> = scored.collect();
    let order =
        |a: &(&ParallelPair, f64), b: &(&ParallelPair, f64)| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id));
    if all.len() > k {
        all.select_nth_unstable_by(k, order);
        all.truncate(k);
    }
    all.sort_by(order);
    all
}
