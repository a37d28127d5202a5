//! Splits a parallel corpus into train/validation/test and checks the test
//! set for leakage into the retrieval pool.
//!
//! ```text
//! cargo run --example corpus_split
//! ```

use std::path::PathBuf;

use postedit::corpus::{leakage_check, load_parallel, partition, CorpusFormat, PartitionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let mut pairs = load_parallel(&demo.join("corpus.tsv"), CorpusFormat::Tsv)?;
    pairs.extend(load_parallel(&demo.join("test.tsv"), CorpusFormat::Tsv)?);

    let spec = PartitionSpec { test_book: "Genesis".into(), test_verses: 5, seed: 7, ..Default::default() };
    let split = partition(&pairs, &spec)?;
    println!("train {}  validation {}  test {}", split.train.len(), split.validation.len(), split.test.len());
    println!("validation ids: {:?}", split.validation.iter().map(|p| &p.id).collect::<Vec<_>>());
    println!("test ids:       {:?}", split.test.iter().map(|p| &p.id).collect::<Vec<_>>());

    let report = leakage_check(&split.test, &split.train);
    println!("test vs train leakage: {}", if report.is_clean() { "clean" } else { "FOUND" });

    // a pool that contains a test verse is caught
    let mut leaky = split.train.clone();
    leaky.push(split.test[0].clone());
    for c in leakage_check(&split.test, &leaky).collisions {
        println!("collision: {} -> {:?}", c.test_id, c.matches);
    }
    Ok(())
}
