use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::books::canonical_book;
use super::{CorpusError, Origin, ParallelPair, Result};
use crate::text::normalize_for_match;

/// How to carve an in-domain train/validation split and an out-of-domain test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    /// Share of NT pairs used for training; the remainder is validation.
    pub train_fraction: f64,
    /// Book (USFM code or English name) the test verses are drawn from.
    pub test_book: String,
    /// Number of leading verses of `test_book` in the test set.
    pub test_verses: usize,
    pub seed: u64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self { train_fraction: 0.95, test_book: "Genesis".into(), test_verses: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<ParallelPair>,
    pub validation: Vec<ParallelPair>,
    pub test: Vec<ParallelPair>,
}

/// Splits NT pairs into train/validation by seeded shuffle and selects the
/// first `test_verses` verses of the test book from the OT pairs.
///
/// Train and validation keep input order. Test pairs are ordered by
/// (chapter, verse); segments of one verse keep input order.
pub fn partition(pairs: &[ParallelPair], spec: &PartitionSpec) -> Result<Partition> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(CorpusError::InvalidPartition(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    if spec.test_verses == 0 {
        return Err(CorpusError::InvalidPartition("test_verses must be >= 1".into()));
    }

    let nt: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].origin == Origin::NewTestament).collect();
    if nt.is_empty() {
        return Err(CorpusError::InvalidPartition("no NT pairs to split".into()));
    }
    let mut shuffled = nt.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = ((nt.len() as f64) * spec.train_fraction).round() as usize;
    let n_train = n_train.min(nt.len());
    let (train_idx, val_idx) = shuffled.split_at(n_train);
    let collect = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pairs[i].clone()).collect::<Vec<_>>()
    };

    let book = canonical_book(&spec.test_book);
    let mut candidates: Vec<&ParallelPair> = pairs
        .iter()
        .filter(|p| p.origin == Origin::OldTestament)
        .filter(|p| p.verse_ref.as_ref().is_some_and(|r| canonical_book(&r.book) == book))
        .collect();
    // stable: split-verse segments stay in file order
    candidates.sort_by_key(|p| {
        let r = p.verse_ref.as_ref().expect("filtered on verse_ref");
        (r.chapter, r.verse)
    });
    let mut test = Vec::new();
    let mut verses_taken = 0;
    let mut last_verse = None;
    for p in candidates {
        let r = p.verse_ref.as_ref().expect("filtered on verse_ref");
        let key = (r.chapter, r.verse);
        if last_verse != Some(key) {
            if verses_taken == spec.test_verses {
                break;
            }
            verses_taken += 1;
            last_verse = Some(key);
        }
        test.push(p.clone());
    }
    if test.is_empty() {
        return Err(CorpusError::InvalidPartition(format!(
            "test selector ({}, {}) matched no OT pairs",
            spec.test_book, spec.test_verses
        )));
    }

    Ok(Partition { train: collect(train_idx), validation: collect(val_idx), test })
}

/// Which side of a pair collided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

/// A test pair whose normalized text also occurs in the auxiliary corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub test_id: String,
    /// (aux pair id, colliding side), in aux order.
    pub matches: Vec<(String, Side)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub collisions: Vec<Collision>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.collisions.is_empty()
    }
}

/// Reports test pairs whose normalized source or target text appears on the
/// same side of any auxiliary pair.
pub fn leakage_check(test: &[ParallelPair], aux: &[ParallelPair]) -> LeakageReport {
    let mut by_source: HashMap<String, Vec<&str>> = HashMap::new();
    let mut by_target: HashMap<String, Vec<&str>> = HashMap::new();
    for p in aux {
        by_source.entry(normalize_for_match(&p.source_text)).or_default().push(&p.id);
        by_target.entry(normalize_for_match(&p.target_text)).or_default().push(&p.id);
    }
    let collisions = test
        .iter()
        .filter_map(|p| {
            let mut matches = Vec::new();
            for (index, text, side) in
                [(&by_source, &p.source_text, Side::Source), (&by_target, &p.target_text, Side::Target)]
            {
                let key = normalize_for_match(text);
                if key.is_empty() {
                    continue;
                }
                if let Some(ids) = index.get(&key) {
                    matches.extend(ids.iter().map(|id| (id.to_string(), side)));
                }
            }
            (!matches.is_empty()).then(|| Collision { test_id: p.id.clone(), matches })
        })
        .collect();
    LeakageReport { collisions }
}
