//! chrF++ and BLEU, at sentence and corpus level.

mod bleu;
mod chrf;
mod tokenizer;

use std::path::PathBuf;

use thiserror::Error;

pub use bleu::{
    corpus_bleu, sentence_stats as bleu_sentence_stats, BleuScore, BleuStats, MAX_ORDER, SMOOTHING_EPSILON,
};
pub use chrf::{
    chrf_pp, corpus_chrf, f_score as chrf_f_score, sentence_stats as chrf_sentence_stats, ChrfParams, ChrfStats,
};
pub use tokenizer::{SubwordTokenizer, UnigramTokenizer, WhitespaceTokenizer, WORD_BOUNDARY};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("nothing to score")]
    Empty,
    #[error("cannot load tokenizer model {path}: {message}")]
    TokenizerModel { path: PathBuf, message: String },
}

fn check_lengths(hyps: usize, refs: usize) -> Result<(), MetricError> {
    if hyps != refs {
        return Err(MetricError::LengthMismatch { hyps, refs });
    }
    if hyps == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Only scores computed with an external subword model are called spBLEU.
pub fn bleu_label(tokenizer: &dyn SubwordTokenizer) -> &'static str {
    if tokenizer.is_subword_model() {
        "spBLEU"
    } else {
        "BLEU"
    }
}

/// Rounds to the two decimals used in result tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
