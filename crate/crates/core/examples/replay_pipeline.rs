//! Runs every demo config from recorded provider replies (no network) and
//! prints the comparison table against the NMT-only baseline.
//!
//! ```text
//! cargo run --example replay_pipeline
//! ```

use std::path::PathBuf;

use postedit::pipeline::{compare, run_experiment, ExperimentConfig, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let mut paths: Vec<PathBuf> =
        std::fs::read_dir(demo.join("configs"))?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    paths.sort();

    let out_dir = std::env::temp_dir().join("postedit-replay-demo");
    let mut reports = Vec::new();
    for path in &paths {
        let config = ExperimentConfig::load(path)?;
        let name = config.display_label();
        let out = run_experiment(
            &config,
            &RunOptions { manifest_path: Some(out_dir.join(format!("{name}.manifest.json"))), resume: false },
        )?;
        reports.push(out.report);
    }
    print!("{}", compare(&reports, "nmt_only")?.render());
    println!("manifests in {}", out_dir.display());
    Ok(())
}
