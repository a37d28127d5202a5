//! Greedy character n-gram selection with counterweighting of n-grams that
//! earlier picks already cover.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{rank_top_k, RetrievalError, RetrievedExample, Strategy};
use crate::corpus::ParallelPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfCwParams {
    /// Multiplicative decay applied to a query n-gram each time a selected
    /// example covers it. `1.0` disables counterweighting.
    pub gamma: f64,
    pub min_order: usize,
    pub max_order: usize,
}

impl Default for ChrfCwParams {
    fn default() -> Self {
        Self { gamma: 0.5, min_order: 2, max_order: 6 }
    }
}

/// Multiset of character n-grams of orders `min_order..=max_order`, taken
/// over the lowercased text with whitespace removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharNgramProfile {
    pub counts: BTreeMap<String, usize>,
    pub min_order: usize,
    pub max_order: usize,
}

impl CharNgramProfile {
    pub fn new(text: &str, min_order: usize, max_order: usize) -> Self {
        let chars: Vec<char> = text.to_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
        let mut counts = BTreeMap::new();
        for n in min_order..=max_order {
            if n == 0 || n > chars.len() {
                continue;
            }
            for w in chars.windows(n) {
                *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
        Self { counts, min_order, max_order }
    }

    /// Number of n-grams, duplicates included.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Pre-computed n-gram profiles for a pair pool.
#[derive(Debug, Clone)]
pub struct ChrfCwIndex {
    pub params: ChrfCwParams,
    pairs: Vec<ParallelPair>,
    /// n-gram count of each candidate
    totals: Vec<usize>,
    gram_ids: HashMap<String, u32>,
    postings: Vec<Vec<u32>>,
}

struct HeapItem<'a> {
    score: f64,
    id: &'a str,
    cand: usize,
}

impl PartialEq for HeapItem<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem<'_> {}

impl PartialOrd for HeapItem<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem<'_> {
    // max-heap: higher score first, then lower id
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.id.cmp(self.id))
    }
}

impl ChrfCwIndex {
    pub fn build(pairs: &[ParallelPair], params: ChrfCwParams) -> Self {
        let mut gram_ids: HashMap<String, u32> = HashMap::new();
        let mut postings: Vec<Vec<u32>> = Vec::new();
        let mut totals = Vec::with_capacity(pairs.len());
        for (ci, pair) in pairs.iter().enumerate() {
            let profile = CharNgramProfile::new(&pair.source_text, params.min_order, params.max_order);
            totals.push(profile.total());
            for g in profile.counts.into_keys() {
                let next = gram_ids.len() as u32;
                let id = *gram_ids.entry(g).or_insert(next);
                if id == next {
                    postings.push(Vec::new());
                }
                postings[id as usize].push(ci as u32);
            }
        }
        Self { params, pairs: pairs.to_vec(), totals, gram_ids, postings }
    }

    /// For every candidate, the indices (into the query's sorted distinct
    /// n-gram list) of the query n-grams it contains.
    fn shared_grams(&self, query: &str) -> Result<(usize, HashMap<usize, Vec<usize>>), RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let profile = CharNgramProfile::new(query, self.params.min_order, self.params.max_order);
        let mut shared: HashMap<usize, Vec<usize>> = HashMap::new();
        for (qi, gram) in profile.counts.keys().enumerate() {
            if let Some(&gid) = self.gram_ids.get(gram) {
                for &c in &self.postings[gid as usize] {
                    shared.entry(c as usize).or_default().push(qi);
                }
            }
        }
        Ok((profile.counts.len(), shared))
    }

    /// Overlap scores without counterweighting: shared distinct query
    /// n-grams over the candidate's n-gram count.
    pub fn plain_top_k(&self, query: &str, k: usize) -> Result<Vec<RetrievedExample>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        let (_, shared) = self.shared_grams(query)?;
        let scored = shared.iter().map(|(&c, qs)| (&self.pairs[c], qs.len() as f64 / self.totals[c] as f64));
        Ok(rank_top_k(scored, k)
            .into_iter()
            .map(|(p, s)| RetrievedExample::new(p.clone(), s, Strategy::ChrfCw))
            .collect())
    }

    /// Greedy counterweighted selection of up to `k` examples, in selection
    /// order with their selection-time scores. Candidates scoring zero are
    /// never selected.
    ///
    /// While counterweighting is active (`gamma < 1`), a candidate whose
    /// source text is byte-identical to an already selected one scores zero.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedExample>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        let gamma = self.params.gamma;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(RetrievalError::InvalidParameter(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let (n_query, shared) = self.shared_grams(query)?;
        let mut weights = vec![1.0f64; n_query];
        let mut selected_sources: HashSet<&str> = HashSet::new();

        let score = |c: usize, weights: &[f64], selected: &HashSet<&str>| -> f64 {
            if gamma < 1.0 && selected.contains(self.pairs[c].source_text.as_str()) {
                return 0.0;
            }
            let sum: f64 = shared[&c].iter().map(|&qi| weights[qi]).sum();
            sum / self.totals[c] as f64
        };

        // Scores never increase, so a stale heap entry is an upper bound.
        let mut heap: BinaryHeap<HeapItem<'_>> = shared
            .keys()
            .map(|&c| HeapItem { score: score(c, &weights, &selected_sources), id: &self.pairs[c].id, cand: c })
            .collect();

        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let Some(top) = heap.pop() else { break };
            let fresh = score(top.cand, &weights, &selected_sources);
            if fresh != top.score {
                heap.push(HeapItem { score: fresh, ..top });
                continue;
            }
            if fresh <= 0.0 {
                break;
            }
            let pair = &self.pairs[top.cand];
            for &qi in &shared[&top.cand] {
                weights[qi] *= gamma;
            }
            selected_sources.insert(pair.source_text.as_str());
            out.push(RetrievedExample::new(pair.clone(), fresh, Strategy::ChrfCw));
        }
        Ok(out)
    }
}
