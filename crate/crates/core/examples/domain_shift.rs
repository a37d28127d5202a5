//! OOV rate of the out-of-domain test set against the in-domain vocabulary,
//! and per-10k frequencies of a few domain terms in both.
//!
//! ```text
//! cargo run --example domain_shift
//! ```

use std::path::PathBuf;

use postedit::analysis::{build_vocab, oov_rate, term_frequency, DefaultWordTokenizer, OovMode};
use postedit::corpus::{load_parallel, CorpusFormat, Origin};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let pool = load_parallel(&demo.join("corpus.tsv"), CorpusFormat::Tsv)?;
    let test = load_parallel(&demo.join("test.tsv"), CorpusFormat::Tsv)?;
    let nt: Vec<&str> =
        pool.iter().filter(|p| p.origin == Origin::NewTestament).map(|p| p.source_text.as_str()).collect();
    let ot: Vec<&str> = test.iter().map(|p| p.source_text.as_str()).collect();

    let tok = DefaultWordTokenizer;
    let vocab = build_vocab(&nt, &tok);
    println!("NT vocabulary: {} types, {} tokens", vocab.tokens.len(), vocab.token_count);
    for mode in [OovMode::Token, OovMode::Type] {
        let held_in = oov_rate(&vocab, &nt, &tok, mode);
        let shifted = oov_rate(&vocab, &ot, &tok, mode);
        println!(
            "OOV ({mode}): NT {:.1}%  OT {:.1}%  ({} of {})",
            held_in.rate * 100.0,
            shifted.rate * 100.0,
            shifted.oov,
            shifted.total
        );
    }

    let terms: Vec<String> = ["light", "waters", "expanse", "Jesus", "world"].map(String::from).to_vec();
    let mut report = term_frequency("NT", &nt, &terms, &tok);
    report.merge(term_frequency("OT", &ot, &terms, &tok));
    report.write_csv(std::io::stdout())?;
    Ok(())
}
