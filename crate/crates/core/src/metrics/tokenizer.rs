use std::collections::HashMap;
use std::path::Path;

use super::MetricError;

/// Word marker used by SentencePiece vocabularies.
pub const WORD_BOUNDARY: char = '\u{2581}';

/// Deterministic text-to-token mapping used for BLEU.
pub trait SubwordTokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
    fn detokenize(&self, tokens: &[String]) -> String;
    fn name(&self) -> String;
    /// True when backed by an external subword model rather than whitespace splitting.
    fn is_subword_model(&self) -> bool;
}

/// Splits on Unicode whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl SubwordTokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn detokenize(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }

    fn name(&self) -> String {
        "whitespace".into()
    }

    fn is_subword_model(&self) -> bool {
        false
    }
}

/// Unigram-LM segmentation over a SentencePiece `.vocab` file
/// (`piece<TAB>log-probability` per line).
///
/// Text is whitespace-normalized, prefixed with the word marker, and
/// segmented by Viterbi search for the highest total piece score.
/// Characters no piece covers become single-character tokens.
#[derive(Debug, Clone)]
pub struct UnigramTokenizer {
    pieces: HashMap<String, f64>,
    max_piece_chars: usize,
    unknown_score: f64,
    name: String,
}

impl UnigramTokenizer {
    pub fn from_vocab_file(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::TokenizerModel { path: path.to_path_buf(), message: e.to_string() })?;
        let name =
            path.file_name().map_or_else(|| "unigram".to_string(), |n| format!("unigram:{}", n.to_string_lossy()));
        Self::from_vocab_str(&text, name)
            .map_err(|message| MetricError::TokenizerModel { path: path.to_path_buf(), message })
    }

    pub fn from_vocab_str(text: &str, name: impl Into<String>) -> Result<Self, String> {
        let mut pieces = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (piece, score) =
                line.split_once('\t').ok_or_else(|| format!("line {}: expected `piece<TAB>score`", i + 1))?;
            let score: f64 = score.trim().parse().map_err(|_| format!("line {}: bad score `{score}`", i + 1))?;
            // control and byte-fallback symbols (<unk>, <s>, <0x41>, ...)
            if piece.len() > 2 && piece.starts_with('<') && piece.ends_with('>') {
                continue;
            }
            pieces.insert(piece.to_string(), score);
        }
        if pieces.is_empty() {
            return Err("vocabulary has no usable pieces".into());
        }
        let max_piece_chars = pieces.keys().map(|p| p.chars().count()).max().unwrap_or(1);
        let min_score = pieces.values().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { pieces, max_piece_chars, unknown_score: min_score - 10.0, name: name.into() })
    }

    fn normalize(text: &str) -> Vec<char> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for w in words {
            out.push(WORD_BOUNDARY);
            out.extend(w.chars());
        }
        out
    }
}

impl SubwordTokenizer for UnigramTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let chars = Self::normalize(text);
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        // best[i]: best score of a segmentation of chars[..i]; back[i]: start of last piece
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        let mut piece = String::new();
        for start in 0..n {
            if best[start] == f64::NEG_INFINITY {
                continue;
            }
            piece.clear();
            for end in start + 1..=(start + self.max_piece_chars).min(n) {
                piece.push(chars[end - 1]);
                let score = match self.pieces.get(piece.as_str()) {
                    Some(s) => *s,
                    None if end == start + 1 => self.unknown_score,
                    None => continue,
                };
                let total = best[start] + score;
                if total > best[end] {
                    best[end] = total;
                    back[end] = start;
                }
            }
        }
        let mut tokens = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = back[end];
            tokens.push(chars[start..end].iter().collect());
            end = start;
        }
        tokens.reverse();
        tokens
    }

    fn detokenize(&self, tokens: &[String]) -> String {
        tokens.concat().replace(WORD_BOUNDARY, " ").trim_start().to_string()
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn is_subword_model(&self) -> bool {
        true
    }
}
