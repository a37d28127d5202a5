use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::fuzzy::{distinct_tokens, SIMILARITY_THRESHOLD};
use super::levenshtein::normalized_levenshtein;
use crate::corpus::LexiconEntry;

/// A glossary entry selected for a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedLexicon {
    pub entry: LexiconEntry,
    /// Position of the entry in the loaded lexicon.
    pub entry_index: usize,
    pub score: f64,
    /// Query word that retrieved the entry; empty for the full dictionary.
    pub query_word: String,
}

fn entry_order(a: &RetrievedLexicon, b: &RetrievedLexicon) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.entry.source_word.cmp(&b.entry.source_word))
        .then_with(|| a.entry.pos.cmp(&b.entry.pos))
        .then_with(|| a.entry.target_word.cmp(&b.entry.target_word))
}

/// Top-`n` entries per query word by similarity to the entry's source word
/// (case-insensitive), deduplicated keeping the best score.
pub fn lexicon_fuzzy_retrieve(lexicon: &[LexiconEntry], query: &str, n: usize) -> Vec<RetrievedLexicon> {
    let keys: Vec<String> = lexicon.iter().map(|e| e.source_word.to_lowercase()).collect();
    let mut best: HashMap<usize, RetrievedLexicon> = HashMap::new();
    for token in distinct_tokens(query) {
        let mut scored: Vec<RetrievedLexicon> = keys
            .iter()
            .enumerate()
            .filter_map(|(i, key)| {
                let score = normalized_levenshtein(&token, key);
                (score >= SIMILARITY_THRESHOLD).then(|| RetrievedLexicon {
                    entry: lexicon[i].clone(),
                    entry_index: i,
                    score,
                    query_word: token.clone(),
                })
            })
            .collect();
        scored.sort_by(entry_order);
        for hit in scored.into_iter().take(n) {
            match best.get(&hit.entry_index) {
                Some(prev) if prev.score >= hit.score => {}
                _ => {
                    best.insert(hit.entry_index, hit);
                }
            }
        }
    }
    let mut out: Vec<RetrievedLexicon> = best.into_values().collect();
    out.sort_by(entry_order);
    out
}

/// Every entry, score 1, in load order.
pub fn lexicon_full(lexicon: &[LexiconEntry]) -> Vec<RetrievedLexicon> {
    lexicon
        .iter()
        .enumerate()
        .map(|(i, e)| RetrievedLexicon { entry: e.clone(), entry_index: i, score: 1.0, query_word: String::new() })
        .collect()
}
