//! Text normalization shared by analysis, retrieval and leakage checks.

/// Splits text into lowercase word tokens with surrounding punctuation removed.
///
/// Tokens that consist only of punctuation are dropped.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let stripped = strip_punctuation(raw);
            if stripped.is_empty() {
                None
            } else {
                Some(stripped.to_lowercase())
            }
        })
        .collect()
}

/// Trims leading and trailing punctuation (Unicode-aware).
pub fn strip_punctuation(s: &str) -> &str {
    s.trim_matches(is_punctuation)
}

pub(crate) fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// Lowercases, collapses internal whitespace, and strips leading/trailing punctuation.
pub fn normalize_for_match(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    strip_punctuation(&collapsed).trim().to_string()
}
