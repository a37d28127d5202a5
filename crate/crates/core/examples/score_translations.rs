//! Scores the demo NMT drafts with chrF++ and BLEU, first on whitespace
//! tokens, then with a small unigram subword vocabulary (spBLEU).
//!
//! ```text
//! cargo run --example score_translations
//! ```

use std::path::PathBuf;

use postedit::corpus::{load_parallel, CorpusFormat};
use postedit::metrics::{chrf_pp, corpus_bleu, corpus_chrf, ChrfParams, UnigramTokenizer, WhitespaceTokenizer};
use postedit::pipeline::load_drafts;

const VOCAB: &str = "<unk>\t0\n▁\t-2.0\na\t-3.0\ne\t-3.0\ni\t-3.5\no\t-3.5\nu\t-3.5\n▁Lo\t-4.0\n▁nee\t-4.5\nnee\t-5.0\ndh\t-4.0\nng\t-4.0\naa\t-4.0\nee\t-4.0\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let test = load_parallel(&demo.join("test.tsv"), CorpusFormat::Tsv)?;
    let drafts = load_drafts(&demo.join("drafts.tsv"))?;
    let hyps: Vec<&str> = test.iter().map(|p| drafts[&p.id].as_str()).collect();
    let refs: Vec<&str> = test.iter().map(|p| p.target_text.as_str()).collect();

    let params = ChrfParams::default();
    for (p, h) in test.iter().zip(&hyps) {
        println!("{:<8} chrF++ {:6.2}", p.id, chrf_pp(h, &p.target_text, &params));
    }
    println!("corpus chrF++ {:.2}", corpus_chrf(&hyps, &refs, &params)?);

    let plain = corpus_bleu(&hyps, &refs, &WhitespaceTokenizer)?;
    println!("{} {:.2} ({})", plain.label, plain.score, plain.tokenizer);
    let sp = UnigramTokenizer::from_vocab_str(VOCAB, "unigram:demo").map_err(|e| format!("bad vocabulary: {e}"))?;
    let sub = corpus_bleu(&hyps, &refs, &sp)?;
    println!("{} {:.2} ({})", sub.label, sub.score, sub.tokenizer);
    Ok(())
}
