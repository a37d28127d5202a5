//! Sweeps the number of examples per query word for word-level fuzzy
//! retrieval and prints the sweep CSV.
//!
//! ```text
//! cargo run --example fuzzy_sweep
//! ```

use std::path::PathBuf;

use postedit::pipeline::{sweep, write_sweep_csv, ExperimentConfig, SweepOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let base = ExperimentConfig::load(&demo.join("configs/postedit_fuzzy_word.json"))?;
    let result = sweep(
        &base,
        &[1, 2, 3, 5, 10],
        &SweepOptions { out_dir: Some(std::env::temp_dir().join("postedit-fuzzy-sweep")), ..Default::default() },
    )?;
    write_sweep_csv(std::io::stdout(), &result)?;
    Ok(())
}
