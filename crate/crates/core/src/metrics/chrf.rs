use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    /// chrF++: character 6-grams, word bigrams, recall weighted twice as much as precision.
    fn default() -> Self {
        Self { char_order: 6, word_order: 2, beta: 2.0 }
    }
}

impl ChrfParams {
    fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// Per-order `[hyp, ref, match]` counts, character orders first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats(pub Vec<[u64; 3]>);

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        if self.0.is_empty() {
            self.0 = vec![[0; 3]; other.0.len()];
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for i in 0..3 {
                a[i] += b[i];
            }
        }
    }
}

const PUNCT: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Whitespace split with one leading or trailing ASCII punctuation mark
/// split off each multi-character word.
fn chrf_words(sentence: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in sentence.split_whitespace() {
        let mut chars = w.chars();
        let first = chars.next();
        let last = w.chars().next_back();
        if w.chars().count() == 1 {
            out.push(w);
        } else if last.is_some_and(|c| PUNCT.contains(c)) {
            let cut = w.len() - 1;
            out.push(&w[..cut]);
            out.push(&w[cut..]);
        } else if first.is_some_and(|c| PUNCT.contains(c)) {
            out.push(&w[..1]);
            out.push(&w[1..]);
        } else {
            out.push(w);
        }
    }
    out
}

fn count<T: Hash + Eq>(items: impl Iterator<Item = T>) -> HashMap<T, u64> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

fn match_stats<T: Hash + Eq>(hyp: &HashMap<T, u64>, reference: &HashMap<T, u64>) -> [u64; 3] {
    let hyp_total: u64 = hyp.values().sum();
    let ref_total: u64 = reference.values().sum();
    let matched = hyp.iter().map(|(g, c)| reference.get(g).map_or(0, |r| (*c).min(*r))).sum();
    // hypothesis n-grams only count when the reference has n-grams of this order
    [if reference.is_empty() { 0 } else { hyp_total }, ref_total, matched]
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    if n > chars.len() {
        return HashMap::new();
    }
    count(chars.windows(n))
}

fn word_ngrams<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], u64> {
    if n > words.len() {
        return HashMap::new();
    }
    count(words.windows(n))
}

pub fn sentence_stats(hypothesis: &str, reference: &str, params: &ChrfParams) -> ChrfStats {
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut stats = Vec::with_capacity(params.orders());
    for n in 1..=params.char_order {
        stats.push(match_stats(&char_ngrams(&hyp_chars, n), &char_ngrams(&ref_chars, n)));
    }
    let hyp_words = chrf_words(hypothesis);
    let ref_words = chrf_words(reference);
    for n in 1..=params.word_order {
        stats.push(match_stats(&word_ngrams(&hyp_words, n), &word_ngrams(&ref_words, n)));
    }
    ChrfStats(stats)
}

/// F-beta (0..100) over precision and recall averaged across the orders
/// where both sides have n-grams.
pub fn f_score(stats: &ChrfStats, params: &ChrfParams) -> f64 {
    let factor = params.beta * params.beta;
    let (mut avg_prec, mut avg_rec, mut effective) = (0.0, 0.0, 0usize);
    for &[hyp, reference, matched] in &stats.0 {
        if hyp > 0 && reference > 0 {
            avg_prec += matched as f64 / hyp as f64;
            avg_rec += matched as f64 / reference as f64;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    avg_prec /= effective as f64;
    avg_rec /= effective as f64;
    if avg_prec + avg_rec == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec)
}

/// Sentence-level chrF++ (or chrF with `word_order = 0`).
pub fn chrf_pp(hypothesis: &str, reference: &str, params: &ChrfParams) -> f64 {
    f_score(&sentence_stats(hypothesis, reference, params), params)
}

/// Corpus-level score over statistics pooled across all sentences.
pub fn corpus_chrf<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    params: &ChrfParams,
) -> Result<f64, MetricError> {
    super::check_lengths(hypotheses.len(), references.len())?;
    let mut pooled = ChrfStats(vec![[0; 3]; params.orders()]);
    for (h, r) in hypotheses.iter().zip(references) {
        pooled.add(&sentence_stats(h.as_ref(), r.as_ref(), params));
    }
    Ok(f_score(&pooled, params))
}
