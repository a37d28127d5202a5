//! Renders a direct-translation and a post-editing prompt with two retrieved
//! examples and a fuzzy glossary.
//!
//! ```text
//! cargo run --example render_prompts
//! ```

use std::path::PathBuf;

use postedit::corpus::{load_lexicon, load_parallel, CorpusFormat};
use postedit::prompt::{parse_user, render_direct, render_postedit, ContextBundle, LanguageProfile};
use postedit::retrieval::{lexicon_fuzzy_retrieve, Bm25Index, Bm25Params};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let pool = load_parallel(&demo.join("corpus.tsv"), CorpusFormat::Tsv)?;
    let lexicon = load_lexicon(&demo.join("lexicon.tsv"))?;
    let source = "God saw the light, and saw that it was good.";
    let draft = "Lo ngèpi nèrè needhe, dhe ngèpi nga na mèdhe.";

    let bundle = ContextBundle {
        examples: Bm25Index::build(&pool, Bm25Params::default()).retrieve(source, 2)?,
        lexicon: lexicon_fuzzy_retrieve(&lexicon, source, 1),
    };
    let profile = LanguageProfile::dhao();

    let direct = render_direct(source, &bundle, &profile)?;
    println!("##### {} system\n{}\n", direct.mode, direct.system);
    println!("##### {} user\n{}\n", direct.mode, direct.user);

    let edit = render_postedit(source, draft, &bundle, &profile)?;
    println!("##### {} user\n{}\n", edit.mode, edit.user);

    let parsed = parse_user(&edit.user, &profile)?;
    println!(
        "parsed back: {} examples, {} glossary lines, draft present: {}; fingerprint {}",
        parsed.example_count,
        parsed.glossary_count,
        parsed.draft.is_some(),
        edit.fingerprint()
    );
    Ok(())
}
