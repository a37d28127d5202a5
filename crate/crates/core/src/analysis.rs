//! Domain-shift statistics: out-of-vocabulary rates against a training
//! vocabulary and per-10k-token term frequencies.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::word_tokens;

/// A deterministic word tokenizer.
pub trait WordTokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;

    /// Short label recorded alongside every statistic computed with it.
    fn name(&self) -> &str;
}

/// Lowercase, split on Unicode whitespace, strip surrounding punctuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultWordTokenizer;

impl WordTokenizer for DefaultWordTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        word_tokens(text)
    }

    fn name(&self) -> &str {
        "lowercase+whitespace+strip-punct"
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub tokens: BTreeSet<String>,
    /// Total tokens seen while building, duplicates included.
    pub token_count: usize,
}

impl Vocab {
    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn add_text(&mut self, text: &str, tokenizer: &dyn WordTokenizer) {
        for tok in tokenizer.tokenize(text) {
            self.token_count += 1;
            self.tokens.insert(tok);
        }
    }
}

pub fn build_vocab<S: AsRef<str>>(texts: &[S], tokenizer: &dyn WordTokenizer) -> Vocab {
    let mut vocab = Vocab::default();
    for t in texts {
        vocab.add_text(t.as_ref(), tokenizer);
    }
    vocab
}

/// Whether OOV is counted over token occurrences or distinct types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovMode {
    #[default]
    Token,
    Type,
}

impl fmt::Display for OovMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovMode::Token => "token",
            OovMode::Type => "type",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OovReport {
    pub rate: f64,
    pub oov: usize,
    pub total: usize,
    pub mode: OovMode,
    pub tokenizer: String,
    /// Set when the evaluation texts had no tokens; `rate` is then 0 by convention.
    pub empty_input: bool,
}

pub fn oov_rate<S: AsRef<str>>(vocab: &Vocab, texts: &[S], tokenizer: &dyn WordTokenizer, mode: OovMode) -> OovReport {
    let tokens = texts.iter().flat_map(|t| tokenizer.tokenize(t.as_ref()));
    let (oov, total) = match mode {
        OovMode::Token => {
            tokens.fold((0, 0), |(oov, total), tok| (oov + usize::from(!vocab.contains(&tok)), total + 1))
        }
        OovMode::Type => {
            let types: BTreeSet<String> = tokens.collect();
            (types.iter().filter(|t| !vocab.contains(t)).count(), types.len())
        }
    };
    OovReport {
        rate: if total == 0 { 0.0 } else { oov as f64 / total as f64 },
        oov,
        total,
        mode,
        tokenizer: tokenizer.name().to_string(),
        empty_input: total == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFrequencyRow {
    pub term: String,
    pub corpus_label: String,
    pub raw_count: usize,
    pub total_tokens: usize,
    pub count_per_10k: f64,
}

impl TermFrequencyRow {
    fn new(term: String, corpus_label: String, raw_count: usize, total_tokens: usize) -> Self {
        let count_per_10k = if total_tokens == 0 { 0.0 } else { raw_count as f64 * 10_000.0 / total_tokens as f64 };
        Self { term, corpus_label, raw_count, total_tokens, count_per_10k }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermFrequencyReport {
    pub rows: Vec<TermFrequencyRow>,
    pub tokenizer: String,
}

impl TermFrequencyReport {
    pub fn merge(&mut self, other: TermFrequencyReport) {
        if self.tokenizer.is_empty() {
            self.tokenizer = other.tokenizer;
        }
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Case-insensitive occurrence counts of each term, per 10k tokens of `texts`.
///
/// Multi-word terms match as contiguous token sequences.
pub fn term_frequency<S: AsRef<str>>(
    corpus_label: &str,
    texts: &[S],
    terms: &[String],
    tokenizer: &dyn WordTokenizer,
) -> TermFrequencyReport {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenizer.tokenize(t.as_ref())).collect();
    let total: usize = docs.iter().map(Vec::len).sum();
    let rows = terms
        .iter()
        .map(|term| {
            let needle = tokenizer.tokenize(term);
            let count = if needle.is_empty() {
                0
            } else {
                docs.iter().map(|d| d.windows(needle.len()).filter(|w| *w == needle.as_slice()).count()).sum()
            };
            TermFrequencyRow::new(term.clone(), corpus_label.to_string(), count, total)
        })
        .collect();
    TermFrequencyReport { rows, tokenizer: tokenizer.name().to_string() }
}
