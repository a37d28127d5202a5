//! Slow, obviously-correct reference implementations.

use std::collections::BTreeMap;

fn ngram_counts(tokens: &[&str], n: usize) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *m.entry(tokens[i..i + n].join("\u{1}")).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU from pooled clipped counts over whitespace tokens.
pub fn bleu(pairs: &[(String, String)]) -> f64 {
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (h, r) in pairs {
        let ht: Vec<&str> = h.split_whitespace().collect();
        let rt: Vec<&str> = r.split_whitespace().collect();
        hyp_len += ht.len() as u64;
        ref_len += rt.len() as u64;
        for n in 1..=4 {
            let hc = ngram_counts(&ht, n);
            let rc = ngram_counts(&rt, n);
            for (g, c) in &hc {
                totals[n - 1] += c;
                matches[n - 1] += (*c).min(*rc.get(g).unwrap_or(&0));
            }
        }
    }
    if hyp_len == 0 {
        return if ref_len == 0 { 100.0 } else { 0.0 };
    }
    let orders: Vec<usize> = (0..4).filter(|&n| totals[n] > 0).collect();
    let log_mean = orders.iter().map(|&n| (matches[n] as f64).max(1e-9).ln() - (totals[n] as f64).ln()).sum::<f64>()
        / orders.len() as f64;
    let bp = if hyp_len >= ref_len { 1.0 } else { (1.0 - ref_len as f64 / hyp_len as f64).exp() };
    100.0 * bp * log_mean.exp()
}
