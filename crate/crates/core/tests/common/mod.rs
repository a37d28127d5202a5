#![allow(dead_code)]

pub mod demo;
pub mod mock_server;
pub mod oracles;
pub mod prompts;
pub mod retrieval_oracles;

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `(hypothesis, reference)` rows of the metric parity fixture.
pub fn metric_pairs() -> Vec<(String, String)> {
    std::fs::read_to_string(fixture("metric_pairs.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (h, r) = l.split_once('\t').unwrap();
            (h.to_string(), r.to_string())
        })
        .collect()
}

/// chrF++ of each fixture row from the reference scorer (sacrebleu 2.6.0,
/// `CHRF(word_order=2)`), rounded to 4 decimals.
pub const SENTENCE_CHRF_ORACLE: [f64; 20] = [
    91.3745, 84.6353, 79.5601, 77.1106, 73.2499, 65.1479, 81.4647, 73.9280, 49.4976, 47.7838, 56.3354, 29.5481,
    68.1426, 100.0, 70.2918, 79.4124, 53.9445, 45.9011, 5.1448, 51.9170,
];

pub const CORPUS_CHRF_ORACLE: f64 = 66.2965;

/// Whitespace-token BLEU over the fixture from the pooled-count oracle.
/// sacrebleu (`tokenize="none"`, floor smoothing at 1e-9, effective order)
/// agrees: 42.78620896721398.
pub const CORPUS_BLEU_ORACLE: f64 = 42.7862;
