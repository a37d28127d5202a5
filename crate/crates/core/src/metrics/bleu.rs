use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenizer::SubwordTokenizer;
use super::MetricError;

pub const MAX_ORDER: usize = 4;

/// Replacement numerator for n-gram orders with zero matches.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Pooled n-gram statistics for BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn from_tokens(hyp: &[String], reference: &[String]) -> Self {
        let mut stats = BleuStats { hyp_len: hyp.len() as u64, ref_len: reference.len() as u64, ..Default::default() };
        for n in 1..=MAX_ORDER {
            if hyp.len() < n {
                break;
            }
            let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
            if reference.len() >= n {
                for g in reference.windows(n) {
                    *ref_counts.entry(g).or_insert(0) += 1;
                }
            }
            let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
            for g in hyp.windows(n) {
                *hyp_counts.entry(g).or_insert(0) += 1;
            }
            stats.totals[n - 1] = (hyp.len() + 1 - n) as u64;
            stats.matches[n - 1] = hyp_counts.iter().map(|(g, c)| ref_counts.get(g).map_or(0, |r| (*c).min(*r))).sum();
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// BLEU in `[0, 100]`: brevity penalty times the geometric mean of the
    /// n-gram precisions over the orders the hypothesis side has n-grams
    /// for. Zero match counts are replaced by [`SMOOTHING_EPSILON`].
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return if self.ref_len == 0 { 100.0 } else { 0.0 };
        }
        let mut log_sum = 0.0;
        let mut effective = 0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                break;
            }
            let numerator = if self.matches[n] == 0 { SMOOTHING_EPSILON } else { self.matches[n] as f64 };
            log_sum += (numerator / self.totals[n] as f64).ln();
            effective += 1;
        }
        let bp =
            if self.hyp_len >= self.ref_len { 1.0 } else { (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp() };
        (100.0 * bp * (log_sum / effective as f64).exp()).clamp(0.0, 100.0)
    }
}

/// BLEU together with the tokenizer that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub stats: BleuStats,
    pub tokenizer: String,
    /// `"spBLEU"` with an external subword model, `"BLEU"` otherwise.
    pub label: String,
}

pub fn sentence_stats(hypothesis: &str, reference: &str, tokenizer: &dyn SubwordTokenizer) -> BleuStats {
    BleuStats::from_tokens(&tokenizer.tokenize(hypothesis), &tokenizer.tokenize(reference))
}

pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    tokenizer: &dyn SubwordTokenizer,
) -> Result<BleuScore, MetricError> {
    super::check_lengths(hypotheses.len(), references.len())?;
    let mut pooled = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        pooled.add(&sentence_stats(h.as_ref(), r.as_ref(), tokenizer));
    }
    Ok(BleuScore {
        score: pooled.score(),
        stats: pooled,
        tokenizer: tokenizer.name(),
        label: super::bleu_label(tokenizer).to_string(),
    })
}
