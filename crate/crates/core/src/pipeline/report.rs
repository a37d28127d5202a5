use serde::{Deserialize, Serialize};

use super::config::{ContextMode, LexiconMode, Mode};
use crate::metrics::{chrf_f_score, BleuStats, ChrfParams, ChrfStats};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub id: String,
    pub bleu: f64,
    pub chrf: f64,
    pub bleu_stats: BleuStats,
    pub chrf_stats: ChrfStats,
}

/// Scores of one run plus everything needed to tell runs apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub mode: Mode,
    pub context: ContextMode,
    /// `k` or `n`; absent without context.
    pub k_or_n: Option<usize>,
    pub lexicon_mode: LexiconMode,
    pub corpus_bleu: f64,
    pub corpus_chrf: f64,
    /// `"spBLEU"` or `"BLEU"`, see [`crate::metrics::bleu_label`].
    pub bleu_label: String,
    pub tokenizer: String,
    pub bleu_smoothing: String,
    pub chrf_params: ChrfParams,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub effective_k_mean: f64,
    pub config_fingerprint: String,
    pub test_set_fingerprint: String,
    pub per_sentence: Vec<SentenceScore>,
}

impl EvalReport {
    /// Corpus BLEU and chrF++ rebuilt from the pooled per-sentence statistics.
    pub fn recompute(&self) -> (f64, f64) {
        let mut bleu = BleuStats::default();
        let mut chrf = ChrfStats(Vec::new());
        for s in &self.per_sentence {
            bleu.add(&s.bleu_stats);
            chrf.add(&s.chrf_stats);
        }
        (bleu.score(), chrf_f_score(&chrf, &self.chrf_params))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed {
        error: String,
    },
    /// Not attempted because the run stopped early.
    Pending,
}

/// Everything that happened to one test sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub source: String,
    pub reference: String,
    pub draft: Option<String>,
    pub retrieved_ids: Vec<String>,
    /// Positions in the loaded lexicon.
    pub lexicon_indices: Vec<usize>,
    pub effective_k: usize,
    pub prompt_hash: Option<String>,
    pub prompt_bytes: Option<usize>,
    /// Exchange cache file stem.
    pub cache_key: Option<String>,
    /// Raw completion, or the draft in NMT_ONLY mode.
    pub output: Option<String>,
    pub status: RecordStatus,
    pub bleu: Option<f64>,
    pub chrf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectiveK {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

impl EffectiveK {
    pub fn of(values: impl IntoIterator<Item = usize>) -> Self {
        let v: Vec<usize> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        Self {
            mean: v.iter().sum::<usize>() as f64 / v.len() as f64,
            min: *v.iter().min().unwrap(),
            max: *v.iter().max().unwrap(),
        }
    }
}

/// Persisted trace of a run. Holds no timings so identical runs serialize
/// identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub label: String,
    pub config_fingerprint: String,
    pub corpus_hash: String,
    pub test_set_fingerprint: String,
    pub lexicon_hash: Option<String>,
    pub drafts_hash: Option<String>,
    pub effective_k: EffectiveK,
    pub records: Vec<SentenceRecord>,
}

impl RunManifest {
    pub fn load(path: &std::path::Path) -> Result<Self, super::PipelineError> {
        let bytes =
            std::fs::read(path).map_err(|e| super::PipelineError::Io { path: path.to_path_buf(), source: e })?;
        serde_json::from_slice(&bytes).map_err(|e| super::PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), super::PipelineError> {
        super::write_json(path, self)
    }

    pub fn failed(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.records.iter().filter(|r| !matches!(r.status, RecordStatus::Ok))
    }
}
