use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::RetrievalCorpus;
use crate::metrics::ChrfParams;
use crate::prompt::LanguageProfile;
use crate::provider::ProviderConfig;
use crate::retrieval::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Score the drafts as they are.
    NmtOnly,
    /// Translate the source with the LLM, no draft.
    DirectLlm,
    /// Let the LLM correct the draft.
    PostEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContextMode {
    None,
    /// The same `k` randomly drawn NT pairs in every prompt.
    StaticK,
    Bm25,
    Dense,
    ChrfCw,
    FuzzyWord,
}

impl ContextMode {
    pub fn strategy(self) -> Option<Strategy> {
        match self {
            ContextMode::None => None,
            ContextMode::StaticK => Some(Strategy::Static),
            ContextMode::Bm25 => Some(Strategy::Bm25),
            ContextMode::Dense => Some(Strategy::Dense),
            ContextMode::ChrfCw => Some(Strategy::ChrfCw),
            ContextMode::FuzzyWord => Some(Strategy::FuzzyWord),
        }
    }

    /// Lower-case name used in tables and on the command line.
    pub fn as_str(self) -> &'static str {
        self.strategy().map_or("none", Strategy::as_str)
    }
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ContextMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(Self::None),
            "static" | "static-k" => Ok(Self::StaticK),
            "bm25" => Ok(Self::Bm25),
            "dense" => Ok(Self::Dense),
            "chrf-cw" | "chrf" => Ok(Self::ChrfCw),
            "fuzzy-word" | "word" => Ok(Self::FuzzyWord),
            other => Err(format!("unknown context strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LexiconMode {
    None,
    /// Top `lexicon_n` entries per source word.
    FuzzyN,
    /// The whole lexicon in every prompt.
    Full,
}

/// Input files. Relative paths in a config file are resolved against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DataPaths {
    /// Retrieval pool (NT and grammar pairs).
    pub corpus: PathBuf,
    /// Test pairs; the target side is the reference.
    pub test: PathBuf,
    /// `id<TAB>draft` lines, one per test id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drafts: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// SentencePiece `.vocab` file; without it BLEU is whitespace-tokenized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer_model: Option<PathBuf>,
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.test);
        for p in [&mut self.drafts, &mut self.lexicon, &mut self.tokenizer_model].into_iter().flatten() {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Row label in reports; derived from the settings when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub mode: Mode,
    #[serde(default = "default_context")]
    pub context: ContextMode,
    /// Examples per prompt for sentence-level strategies and STATIC_K.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Matches per source word for FUZZY_WORD.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_lexicon_mode")]
    pub lexicon_mode: LexiconMode,
    /// Entries per source word for FUZZY_N.
    #[serde(default = "default_n")]
    pub lexicon_n: usize,
    #[serde(default)]
    pub retrieval_corpus: RetrievalCorpus,
    /// Seed for STATIC_K draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_seed: Option<u64>,
    #[serde(default = "default_gamma")]
    pub chrf_cw_gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderConfig>,
    #[serde(default)]
    pub language: LanguageProfile,
    #[serde(default)]
    pub chrf: ChrfParams,
    pub paths: DataPaths,
}

fn default_context() -> ContextMode {
    ContextMode::None
}
fn default_k() -> usize {
    5
}
fn default_n() -> usize {
    10
}
fn default_lexicon_mode() -> LexiconMode {
    LexiconMode::None
}
fn default_gamma() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn new(mode: Mode, paths: DataPaths) -> Self {
        Self {
            label: None,
            mode,
            context: ContextMode::None,
            k: default_k(),
            n: default_n(),
            lexicon_mode: LexiconMode::None,
            lexicon_n: default_n(),
            retrieval_corpus: RetrievalCorpus::default(),
            static_seed: None,
            chrf_cw_gamma: default_gamma(),
            provider: None,
            language: LanguageProfile::default(),
            chrf: ChrfParams::default(),
            paths,
        }
    }

    /// Post-editing with word-level fuzzy examples (n = 10) and the full
    /// lexicon.
    pub fn final_preset(paths: DataPaths, provider: ProviderConfig) -> Self {
        Self {
            label: Some("final".into()),
            context: ContextMode::FuzzyWord,
            n: 10,
            lexicon_mode: LexiconMode::Full,
            provider: Some(provider),
            ..Self::new(Mode::PostEdit, paths)
        }
    }

    pub fn preset(name: &str, paths: DataPaths, provider: Option<ProviderConfig>) -> Result<Self, PipelineError> {
        let needs = |p: Option<ProviderConfig>| {
            p.ok_or_else(|| PipelineError::Config(format!("preset `{name}` needs a provider")))
        };
        let mut c = match name {
            "nmt-only" => Self::new(Mode::NmtOnly, paths),
            "final" => Self::final_preset(paths, needs(provider)?),
            "direct-0shot" | "postedit-0shot" | "direct-5shot" | "postedit-5shot" => {
                let mode = if name.starts_with("direct") { Mode::DirectLlm } else { Mode::PostEdit };
                let mut c = Self::new(mode, paths);
                c.provider = Some(needs(provider)?);
                if name.ends_with("5shot") {
                    c.context = ContextMode::StaticK;
                    c.k = 5;
                    c.static_seed = Some(0);
                    c.retrieval_corpus = RetrievalCorpus::NewTestament;
                }
                c
            }
            other => return Err(PipelineError::Config(format!("unknown preset `{other}`"))),
        };
        c.label = Some(name.to_string());
        Ok(c)
    }

    /// Reads a JSON config, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.paths.resolve(path.parent().unwrap_or(Path::new(".")));
        if let Some(p) = cfg.provider.as_mut() {
            if let Some(dir) = p.cache_dir.as_mut() {
                if dir.is_relative() {
                    *dir = path.parent().unwrap_or(Path::new(".")).join(&*dir);
                }
            }
        }
        Ok(cfg)
    }

    /// The value swept for this strategy: `n` for FUZZY_WORD, `k` otherwise.
    pub fn k_or_n(&self) -> usize {
        if self.context == ContextMode::FuzzyWord {
            self.n
        } else {
            self.k
        }
    }

    pub fn set_k_or_n(&mut self, value: usize) {
        if self.context == ContextMode::FuzzyWord {
            self.n = value;
        } else {
            self.k = value;
        }
    }

    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mode = match self.mode {
            Mode::NmtOnly => return "nmt-only".into(),
            Mode::DirectLlm => "direct",
            Mode::PostEdit => "postedit",
        };
        let mut s = format!("{mode}+{}", self.context);
        if self.context != ContextMode::None {
            s.push_str(&format!("@{}", self.k_or_n()));
        }
        match self.lexicon_mode {
            LexiconMode::None => {}
            LexiconMode::FuzzyN => s.push_str(&format!("+lexicon@{}", self.lexicon_n)),
            LexiconMode::Full => s.push_str("+lexicon-full"),
        }
        s
    }

    /// Checks every cross-field rule. Runs before any file is read or
    /// request is sent.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        match self.mode {
            Mode::NmtOnly => {
                if self.paths.drafts.is_none() {
                    return bad("NMT_ONLY needs paths.drafts".into());
                }
                if self.provider.is_some() {
                    return bad("NMT_ONLY must not configure a provider".into());
                }
                if self.context != ContextMode::None || self.lexicon_mode != LexiconMode::None {
                    return bad("NMT_ONLY takes no context or lexicon".into());
                }
            }
            Mode::DirectLlm | Mode::PostEdit => {
                let Some(p) = &self.provider else {
                    return bad(format!("{:?} needs a provider", self.mode));
                };
                p.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
                if self.mode == Mode::PostEdit && self.paths.drafts.is_none() {
                    return bad("POST_EDIT needs paths.drafts".into());
                }
                if self.context == ContextMode::Dense && p.embedding_model.is_none() {
                    return bad("DENSE context needs provider.embedding_model".into());
                }
            }
        }
        match self.context {
            ContextMode::None => {}
            ContextMode::FuzzyWord if self.n == 0 => return bad("n must be at least 1".into()),
            ContextMode::FuzzyWord => {}
            _ if self.k == 0 => return bad("k must be at least 1".into()),
            ContextMode::StaticK if self.static_seed.is_none() => return bad("STATIC_K needs static_seed".into()),
            _ => {}
        }
        if self.context == ContextMode::ChrfCw && !(0.0..=1.0).contains(&self.chrf_cw_gamma) {
            return bad(format!("chrf_cw_gamma {} outside [0, 1]", self.chrf_cw_gamma));
        }
        if self.lexicon_mode != LexiconMode::None && self.paths.lexicon.is_none() {
            return bad("lexicon retrieval needs paths.lexicon".into());
        }
        if self.lexicon_mode == LexiconMode::FuzzyN && self.lexicon_n == 0 {
            return bad("lexicon_n must be at least 1".into());
        }
        if self.chrf.char_order == 0 || self.chrf.beta.is_nan() || self.chrf.beta <= 0.0 {
            return bad("chrf.char_order must be >= 1 and chrf.beta > 0".into());
        }
        Ok(())
    }
}
