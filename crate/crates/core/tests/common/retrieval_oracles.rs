//! Exhaustive-scan reference retrievers. Everything is recomputed from the
//! raw texts on every call.

use std::collections::{BTreeMap, BTreeSet};

use postedit::corpus::{LexiconEntry, Origin, ParallelPair};

pub fn pool(texts: &[String]) -> Vec<ParallelPair> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| ParallelPair::new(format!("d{i:04}"), t.as_str(), "x", Origin::NewTestament, None).unwrap())
        .collect()
}

/// Lowercase, whitespace split, non-alphanumeric edges trimmed.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn similarity(a: &str, b: &str) -> f64 {
    let m = a.chars().count().max(b.chars().count());
    if m == 0 {
        1.0
    } else {
        1.0 - levenshtein(a, b) as f64 / m as f64
    }
}

fn ranked(mut v: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// `(id, score)` of the BM25 top-k, zero scores dropped.
pub fn bm25(pairs: &[ParallelPair], query: &str, k: usize, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = pairs.iter().map(|p| tokens(&p.source_text)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<String> = tokens(query).into_iter().collect();
    let mut out = Vec::new();
    for (p, doc) in pairs.iter().zip(&docs) {
        let mut score = 0.0;
        for t in &terms {
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc.len() as f64 / avgdl));
        }
        if score > 0.0 {
            out.push((p.id.clone(), score));
        }
    }
    ranked(out, k)
}

pub fn dense(ids: &[String], rows: &[Vec<f64>], query: &[f64], k: usize) -> Vec<(String, f64)> {
    let unit = |v: &[f64]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| if n == 0.0 { *x } else { x / n }).collect::<Vec<f64>>()
    };
    let q = unit(query);
    let scored =
        ids.iter().zip(rows).map(|(id, r)| (id.clone(), unit(r).iter().zip(&q).map(|(a, b)| a * b).sum())).collect();
    ranked(scored, k)
}

fn distinct(query: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokens(query).into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// `(id, score, matched token)` of word-level fuzzy retrieval.
pub fn fuzzy_word(pairs: &[ParallelPair], query: &str, n: usize) -> Vec<(String, f64, String)> {
    let mut best: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for tok in distinct(query) {
        let per_sentence: Vec<(String, f64)> = pairs
            .iter()
            .filter_map(|p| {
                let s = tokens(&p.source_text).iter().map(|w| similarity(&tok, w)).fold(0.0, f64::max);
                (s >= 0.5).then(|| (p.id.clone(), s))
            })
            .collect();
        for (id, s) in ranked(per_sentence, n) {
            if best.get(&id).is_none_or(|(prev, _)| s > *prev) {
                best.insert(id, (s, tok.clone()));
            }
        }
    }
    let mut out: Vec<_> = best.into_iter().map(|(id, (s, t))| (id, s, t)).collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// `(entry index, score)` of fuzzy lexicon retrieval, ordered by score then
/// source word, POS and target word.
pub fn lexicon_fuzzy(lexicon: &[LexiconEntry], query: &str, n: usize) -> Vec<(usize, f64)> {
    let key = |i: usize| {
        let e = &lexicon[i];
        (e.source_word.clone(), e.pos.clone(), e.target_word.clone())
    };
    let order =
        |a: &(usize, f64), b: &(usize, f64)| b.1.partial_cmp(&a.1).unwrap().then_with(|| key(a.0).cmp(&key(b.0)));
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in distinct(query) {
        let mut scored: Vec<(usize, f64)> = (0..lexicon.len())
            .map(|i| (i, similarity(&tok, &lexicon[i].source_word.to_lowercase())))
            .filter(|(_, s)| *s >= 0.5)
            .collect();
        scored.sort_by(order);
        for (i, s) in scored.into_iter().take(n) {
            let e = best.entry(i).or_insert(s);
            *e = e.max(s);
        }
    }
    let mut out: Vec<_> = best.into_iter().collect();
    out.sort_by(order);
    out
}

/// Distinct character n-grams (orders 2..=6) of the lowercased text with
/// whitespace removed, and the total count with duplicates.
pub fn char_ngrams(text: &str) -> (BTreeSet<String>, usize) {
    let chars: Vec<char> = text.to_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    let mut set = BTreeSet::new();
    let mut total = 0;
    for n in 2..=6 {
        for i in 0..(chars.len() + 1).saturating_sub(n) {
            set.insert(chars[i..i + n].iter().collect());
            total += 1;
        }
    }
    (set, total)
}

/// Greedy counterweighted selection, rescoring every candidate at every step.
pub fn chrf_cw(pairs: &[ParallelPair], query: &str, k: usize, gamma: f64) -> Vec<(String, f64)> {
    let (qgrams, _) = char_ngrams(query);
    let mut w: BTreeMap<&String, f64> = qgrams.iter().map(|g| (g, 1.0)).collect();
    let profiles: Vec<_> = pairs.iter().map(|p| char_ngrams(&p.source_text)).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    while out.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for (c, (grams, total)) in profiles.iter().enumerate() {
            if chosen.contains(&c) {
                continue;
            }
            let duplicate = chosen.iter().any(|&s| pairs[s].source_text == pairs[c].source_text);
            let score = if gamma < 1.0 && duplicate {
                0.0
            } else {
                grams.iter().filter_map(|g| w.get(g)).sum::<f64>() / *total.max(&1) as f64
            };
            let better = match best {
                None => true,
                Some((b, s)) => score > s || (score == s && pairs[c].id < pairs[b].id),
            };
            if better {
                best = Some((c, score));
            }
        }
        let Some((c, score)) = best.filter(|(_, s)| *s > 0.0) else { break };
        for g in profiles[c].0.iter() {
            if let Some(x) = w.get_mut(g) {
                *x *= gamma;
            }
        }
        chosen.push(c);
        out.push((pairs[c].id.clone(), score));
    }
    out
}
