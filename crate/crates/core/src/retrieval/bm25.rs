use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{rank_top_k, RetrievalError, RetrievedExample, Strategy};
use crate::corpus::ParallelPair;
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

/// Inverted BM25 index over the English side of a pair pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub params: Bm25Params,
    pairs: Vec<ParallelPair>,
    doc_lengths: Vec<usize>,
    /// term -> postings of (doc index, term frequency), doc index ascending
    postings: HashMap<String, Vec<(u32, u32)>>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn build(pairs: &[ParallelPair], params: Bm25Params) -> Self {
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(pairs.len());
        for (doc, pair) in pairs.iter().enumerate() {
            let tokens = word_tokens(&pair.source_text);
            doc_lengths.push(tokens.len());
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((doc as u32, count));
            }
        }
        let total: usize = doc_lengths.iter().sum();
        let avgdl = if pairs.is_empty() { 0.0 } else { total as f64 / pairs.len() as f64 };
        Self { params, pairs: pairs.to_vec(), doc_lengths, postings, avgdl }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.pairs.len() as f64;
        let df = self.document_frequency(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Accumulated scores of every document sharing a term with the query.
    /// Query terms count once each.
    fn score_all(&self, query: &str) -> HashMap<usize, f64> {
        let mut terms = word_tokens(query);
        terms.sort();
        terms.dedup();
        let Bm25Params { k1, b } = self.params;
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for &(doc, tf) in list {
                let tf = tf as f64;
                let dl = self.doc_lengths[doc as usize] as f64;
                let norm = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avgdl));
                *scores.entry(doc as usize).or_insert(0.0) += idf * norm;
            }
        }
        scores
    }

    /// Top-k documents by BM25 score. Documents scoring zero are never returned.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedExample>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        let candidates =
            self.score_all(query).into_iter().filter(|(_, s)| *s > 0.0).map(|(doc, s)| (&self.pairs[doc], s));
        Ok(rank_top_k(candidates, k)
            .into_iter()
            .map(|(pair, score)| RetrievedExample::new(pair.clone(), score, Strategy::Bm25))
            .collect())
    }
}
