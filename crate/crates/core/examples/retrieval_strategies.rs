//! Retrieves examples for one test sentence with every strategy, plus
//! glossary entries. Dense retrieval replays recorded demo embeddings.
//!
//! ```text
//! cargo run --example retrieval_strategies
//! ```

use std::path::PathBuf;

use postedit::corpus::{load_lexicon, load_parallel, CorpusFormat, RetrievalCorpus};
use postedit::provider::{Provider, ProviderConfig, ProviderKind};
use postedit::retrieval::{
    lexicon_fuzzy_retrieve, Bm25Index, Bm25Params, ChrfCwIndex, ChrfCwParams, EmbeddingIndex, RetrievedExample,
    WordIndex,
};

fn show(name: &str, hits: &[RetrievedExample]) {
    println!("{name}:");
    for h in hits {
        let via = h.matched_token.as_deref().map(|t| format!(" via `{t}`")).unwrap_or_default();
        println!("  {:<10} {:>7.3}{via}  {}", h.pair.id, h.score, h.pair.source_text);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let all = load_parallel(&demo.join("corpus.tsv"), CorpusFormat::Tsv)?;
    let pool: Vec<_> =
        all.into_iter().filter(|p| RetrievalCorpus::NewTestamentPlusGrammar.includes(p.origin)).collect();
    let test = load_parallel(&demo.join("test.tsv"), CorpusFormat::Tsv)?;
    let query = &test[2].source_text;
    println!("query: {query}\n");

    show("bm25 k=3", &Bm25Index::build(&pool, Bm25Params::default()).retrieve(query, 3)?);
    show("chrf-cw k=3", &ChrfCwIndex::build(&pool, ChrfCwParams::default()).retrieve(query, 3)?);
    show("fuzzy-word n=1", &WordIndex::build(&pool).retrieve(query, 1));

    let provider = Provider::from_config(ProviderConfig {
        kind: ProviderKind::Replay,
        model_name: "demo-llm".into(),
        embedding_model: Some("demo-embed".into()),
        api_key_env: None,
        cache_dir: Some(demo.join("fixtures")),
        ..Default::default()
    })?;
    let texts: Vec<String> = pool.iter().map(|p| p.source_text.clone()).collect();
    let index = EmbeddingIndex::build(&pool, provider.embed(&texts)?.vectors, provider.config().fingerprint())?;
    let q = provider.embed(std::slice::from_ref(query))?;
    show("dense k=3", &index.retrieve(&q.vectors[0], 3)?);

    let lexicon = load_lexicon(&demo.join("lexicon.tsv"))?;
    println!("glossary n=1:");
    for e in lexicon_fuzzy_retrieve(&lexicon, query, 1) {
        println!("  {:<10} -> {:<10} {:.2} via `{}`", e.entry.source_word, e.entry.target_word, e.score, e.query_word);
    }
    Ok(())
}
