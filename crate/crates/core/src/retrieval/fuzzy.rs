//! Word-level fuzzy retrieval: the top-n sentences per query word.

use std::collections::HashMap;

use super::levenshtein::normalized_levenshtein;
use super::{RetrievedExample, Strategy};
use crate::corpus::ParallelPair;
use crate::text::word_tokens;

/// Minimum normalized Levenshtein similarity for a match.
pub const SIMILARITY_THRESHOLD: f64 = 0.5;

/// Distinct query tokens in first-occurrence order.
pub(crate) fn distinct_tokens(query: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    word_tokens(query).into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// Vocabulary of the pool's English side with token-to-sentence postings.
#[derive(Debug, Clone)]
pub struct WordIndex {
    pairs: Vec<ParallelPair>,
    vocab: Vec<String>,
    /// vocab index -> sentences containing the token (ascending, distinct)
    postings: Vec<Vec<u32>>,
}

impl WordIndex {
    pub fn build(pairs: &[ParallelPair]) -> Self {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut vocab = Vec::new();
        let mut postings: Vec<Vec<u32>> = Vec::new();
        for (si, pair) in pairs.iter().enumerate() {
            for tok in word_tokens(&pair.source_text) {
                let vi = *ids.entry(tok.clone()).or_insert_with(|| {
                    vocab.push(tok);
                    postings.push(Vec::new());
                    vocab.len() - 1
                });
                if postings[vi].last() != Some(&(si as u32)) {
                    postings[vi].push(si as u32);
                }
            }
        }
        Self { pairs: pairs.to_vec(), vocab, postings }
    }

    /// Sentences whose best-matching token reaches the threshold, with that
    /// best similarity, sorted by score descending then id.
    fn matches_for_token(&self, token: &str) -> Vec<(usize, f64)> {
        let token_len = token.chars().count();
        let mut best: HashMap<usize, f64> = HashMap::new();
        for (vi, word) in self.vocab.iter().enumerate() {
            let word_len = word.chars().count();
            let longest = token_len.max(word_len);
            // distance is at least the length difference
            if longest > 0 && 1.0 - (token_len.abs_diff(word_len) as f64 / longest as f64) < SIMILARITY_THRESHOLD {
                continue;
            }
            let sim = normalized_levenshtein(token, word);
            if sim < SIMILARITY_THRESHOLD {
                continue;
            }
            for &si in &self.postings[vi] {
                let entry = best.entry(si as usize).or_insert(sim);
                if sim > *entry {
                    *entry = sim;
                }
            }
        }
        let mut ranked: Vec<(usize, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.pairs[a.0].id.cmp(&self.pairs[b.0].id)));
        ranked
    }

    /// Union over query words of each word's top-`n` sentences, deduplicated
    /// by pair id (highest score wins; on equal scores, the earlier query word).
    ///
    /// Ordered by score descending, then id. The size is at most
    /// `n * distinct query words`.
    pub fn retrieve(&self, query: &str, n: usize) -> Vec<RetrievedExample> {
        let mut best: HashMap<usize, (f64, String)> = HashMap::new();
        for token in distinct_tokens(query) {
            for (si, sim) in self.matches_for_token(&token).into_iter().take(n) {
                match best.get(&si) {
                    Some((s, _)) if *s >= sim => {}
                    _ => {
                        best.insert(si, (sim, token.clone()));
                    }
                }
            }
        }
        let mut out: Vec<RetrievedExample> = best
            .into_iter()
            .map(|(si, (score, token))| RetrievedExample::fuzzy(self.pairs[si].clone(), score, token))
            .collect();
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.pair.id.cmp(&b.pair.id)));
        debug_assert!(out.iter().all(|e| e.strategy == Strategy::FuzzyWord));
        out
    }
}
