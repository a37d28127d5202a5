//! The prompt golden matrix: {zero, 2 examples, glossary, both} x {POS, no POS} x {direct, post-edit}.

use std::path::PathBuf;

use postedit::corpus::{LexiconEntry, Origin, ParallelPair};
use postedit::prompt::{render_direct, render_postedit, ContextBundle, LanguageProfile, RenderedPrompt};
use postedit::retrieval::{RetrievedExample, RetrievedLexicon, Strategy};

pub const SOURCE: &str = "God called the light “day”, and the darkness he called “night”.";
pub const DRAFT: &str = "Lamatua kale dhara ka “ledo”, Lamatua kale Lamatua kale Lamatua kale.";

const EXAMPLES: [(&str, &str); 2] = [
    ("Lamatua lii: “Dhara ka na!” Ne dhara ka.", "God said, “Let there be light,” and there was light."),
    ("Ngèti èèna Lamatua puru liru ne rai.", "In the beginning, God created the heavens and the earth."),
];
const GLOSSARY: [(&str, &str, &str); 3] =
    [("light", "noun", "dhara"), ("call", "verb", "kale"), ("darkness", "noun", "mèru")];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn bundle(examples: usize, glossary: bool, pos: bool) -> ContextBundle {
    let examples = EXAMPLES[..examples]
        .iter()
        .enumerate()
        .map(|(i, (t, s))| {
            let pair = ParallelPair::new(format!("G{i}"), *s, *t, Origin::Grammar, None).unwrap();
            RetrievedExample::new(pair, 1.0, Strategy::Bm25)
        })
        .collect();
    let lexicon = if glossary {
        GLOSSARY
            .iter()
            .enumerate()
            .map(|(i, (s, p, t))| RetrievedLexicon {
                entry: LexiconEntry::new(*s, pos.then_some(*p), *t),
                entry_index: i,
                score: 1.0,
                query_word: String::new(),
            })
            .collect()
    } else {
        Vec::new()
    };
    ContextBundle { examples, lexicon }
}

/// `(file stem, rendered prompt)` for all 16 cases.
pub fn cases() -> Vec<(String, RenderedPrompt)> {
    let profile = LanguageProfile::dhao();
    let contexts =
        [("zero", 0, false), ("examples2", 2, false), ("glossary", 0, true), ("examples2_glossary", 2, true)];
    let mut out = Vec::new();
    for mode in ["direct", "postedit"] {
        for (name, n, g) in contexts {
            for pos in [true, false] {
                let b = bundle(n, g, pos);
                let p = match mode {
                    "direct" => render_direct(SOURCE, &b, &profile).unwrap(),
                    _ => render_postedit(SOURCE, DRAFT, &b, &profile).unwrap(),
                };
                out.push((format!("{mode}.{name}.{}", if pos { "pos" } else { "nopos" }), p));
            }
        }
    }
    out
}

/// Names of cases whose bytes differ from the committed golden files.
pub fn mismatches() -> Vec<String> {
    let dir = golden_dir();
    let mut bad = Vec::new();
    for (stem, p) in cases() {
        let mode = stem.split('.').next().unwrap();
        let system = std::fs::read(dir.join(format!("{mode}.system.txt"))).unwrap();
        let user = std::fs::read(dir.join(format!("{stem}.user.txt"))).unwrap();
        if system != p.system.as_bytes() || user != p.user.as_bytes() {
            bad.push(stem);
        }
    }
    bad
}
