//! Runs the final configuration on the demo data against a real
//! OpenAI-compatible endpoint.
//!
//! ```text
//! POSTEDIT_BASE_URL=https://api.openai.com/v1 POSTEDIT_MODEL=gpt-4o-mini \
//!   OPENAI_API_KEY=... cargo run --example live_endpoint
//! ```
//!
//! Replies are cached under the system temp dir, so a second run is free.

use std::path::PathBuf;

use postedit::pipeline::{run_experiment, DataPaths, ExperimentConfig, RunOptions};
use postedit::provider::ProviderConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (Ok(base_url), Ok(model)) = (std::env::var("POSTEDIT_BASE_URL"), std::env::var("POSTEDIT_MODEL")) else {
        eprintln!("set POSTEDIT_BASE_URL and POSTEDIT_MODEL (and the key variable, OPENAI_API_KEY by default)");
        return Ok(());
    };
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let provider = ProviderConfig {
        base_url,
        model_name: model,
        api_key_env: Some(std::env::var("POSTEDIT_KEY_ENV").unwrap_or_else(|_| "OPENAI_API_KEY".into())),
        cache_dir: Some(std::env::temp_dir().join("postedit-live-cache")),
        max_in_flight: 2,
        ..Default::default()
    };
    let paths = DataPaths {
        corpus: demo.join("corpus.tsv"),
        test: demo.join("test.tsv"),
        drafts: Some(demo.join("drafts.tsv")),
        lexicon: Some(demo.join("lexicon.tsv")),
        tokenizer_model: None,
    };
    let config = ExperimentConfig::final_preset(paths, provider);
    let out = run_experiment(&config, &RunOptions::default())?;
    for r in &out.manifest.records {
        println!("{}\t{}", r.id, r.output.as_deref().unwrap_or("").trim());
    }
    let r = &out.report;
    println!("{} {:.2}  chrF++ {:.2}", r.bleu_label, r.corpus_bleu, r.corpus_chrf);
    Ok(())
}
