//! Experiment orchestration: configs, runs, manifests, sweeps and
//! comparison tables.

mod compare;
mod config;
mod report;
mod run;
mod sweep;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use compare::{compare, format_delta, hundredths, CompareRow, CompareTable};
pub use config::{ContextMode, DataPaths, ExperimentConfig, LexiconMode, Mode};
pub use report::{EffectiveK, EvalReport, RecordStatus, RunManifest, SentenceRecord, SentenceScore, MANIFEST_VERSION};
pub use run::{load_drafts, run_experiment, RunOptions, RunOutput, Runner};
pub use sweep::{read_sweep_csv, sweep, write_sweep_csv, SweepOptions, SweepResult, SweepRow};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error(transparent)]
    Provider(#[from] crate::provider::ProviderError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
    #[error("run stopped at `{id}`: {error} ({incomplete} sentence(s) not completed)")]
    Aborted { id: String, error: String, incomplete: usize, manifest: Option<PathBuf> },
    #[error("csv: {0}")]
    Csv(String),
    #[error("compare: {0}")]
    Compare(String),
}

/// Pretty JSON with a trailing newline; parent directories are created.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io { path: path.to_path_buf(), source: e };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(io)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}
