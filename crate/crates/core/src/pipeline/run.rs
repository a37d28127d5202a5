use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ContextMode, ExperimentConfig, LexiconMode, Mode};
use super::report::{
    EffectiveK, EvalReport, RecordStatus, RunManifest, SentenceRecord, SentenceScore, MANIFEST_VERSION,
};
use super::PipelineError;
use crate::corpus::{content_hash, load_lexicon, load_parallel, CorpusFormat, LexiconEntry, Origin, ParallelPair};
use crate::metrics::{self, bleu_label, BleuStats, SubwordTokenizer, UnigramTokenizer, WhitespaceTokenizer};
use crate::prompt::{render_direct, render_postedit, ContextBundle, RenderedPrompt};
use crate::provider::Provider;
use crate::retrieval::{
    lexicon_full, lexicon_fuzzy_retrieve, Bm25Index, Bm25Params, ChrfCwIndex, ChrfCwParams, EmbeddingIndex,
    RetrievalError, RetrievedExample, RetrievedLexicon, Strategy, WordIndex,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where the manifest is written, on success and on failure.
    pub manifest_path: Option<PathBuf>,
    /// Reuse completed records from an existing manifest at `manifest_path`.
    pub resume: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub manifest: RunManifest,
}

/// Reads `id<TAB>draft` lines. A first line `id<TAB>draft` is a header.
pub fn load_drafts(path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (i == 0 && line == "id\tdraft") {
            continue;
        }
        let (id, draft) = line
            .split_once('\t')
            .ok_or_else(|| PipelineError::Data(format!("{}:{}: expected `id<TAB>draft`", path.display(), i + 1)))?;
        if out.insert(id.to_string(), draft.to_string()).is_some() {
            return Err(PipelineError::Data(format!("{}:{}: duplicate draft id `{id}`", path.display(), i + 1)));
        }
    }
    Ok(out)
}

fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_json<T: Serialize>(v: &T) -> String {
    hash_bytes(&serde_json::to_vec(v).expect("serializable"))
}

enum Retriever {
    None,
    Static(Vec<RetrievedExample>),
    Bm25(Bm25Index),
    Dense { index: EmbeddingIndex, queries: HashMap<String, Vec<f64>> },
    ChrfCw(ChrfCwIndex),
    Fuzzy(WordIndex),
}

impl Retriever {
    fn retrieve(&self, source: &str, k: usize, n: usize) -> Result<Vec<RetrievedExample>, RetrievalError> {
        let r = match self {
            Retriever::None => Ok(Vec::new()),
            Retriever::Static(v) => Ok(v.clone()),
            Retriever::Bm25(idx) => idx.retrieve(source, k),
            Retriever::Dense { index, queries } => index.retrieve(&queries[source], k),
            Retriever::ChrfCw(idx) => idx.retrieve(source, k),
            Retriever::Fuzzy(idx) => Ok(idx.retrieve(source, n)),
        };
        match r {
            // punctuation-only sources simply get no examples
            Err(RetrievalError::EmptyQuery) => Ok(Vec::new()),
            other => other,
        }
    }
}

/// Inputs of a run after loading and cross-checking.
struct Prepared {
    test: Vec<ParallelPair>,
    drafts: Option<BTreeMap<String, String>>,
    pool: Vec<ParallelPair>,
    lexicon: Vec<LexiconEntry>,
    corpus_hash: String,
    test_hash: String,
    lexicon_hash: Option<String>,
    drafts_hash: Option<String>,
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    config: &'a ExperimentConfig,
    provider: Option<String>,
    tokenizer: String,
    corpus_hash: &'a str,
    test_hash: &'a str,
    lexicon_hash: Option<&'a str>,
    drafts_hash: Option<&'a str>,
}

/// Executes one [`ExperimentConfig`].
pub struct Runner {
    config: ExperimentConfig,
    provider: Option<Arc<Provider>>,
    tokenizer: Arc<dyn SubwordTokenizer>,
}

impl Runner {
    /// Validates the config and constructs the provider and tokenizer. No
    /// request is sent.
    pub fn new(config: ExperimentConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let provider = match (&config.provider, config.mode) {
            (Some(p), Mode::DirectLlm | Mode::PostEdit) => Some(Arc::new(Provider::from_config(p.clone())?)),
            _ => None,
        };
        let tokenizer: Arc<dyn SubwordTokenizer> = match &config.paths.tokenizer_model {
            Some(path) => Arc::new(UnigramTokenizer::from_vocab_file(path)?),
            None => Arc::new(WhitespaceTokenizer),
        };
        Ok(Self { config, provider, tokenizer })
    }

    /// Replaces the provider built from the config, e.g. to share one cache
    /// across sweep cells or to plug in a custom transport.
    pub fn with_provider(mut self, provider: Arc<Provider>) -> Self {
        if self.config.mode != Mode::NmtOnly {
            self.provider = Some(provider);
        }
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn provider(&self) -> Option<&Arc<Provider>> {
        self.provider.as_ref()
    }

    fn prepare(&self) -> Result<Prepared, PipelineError> {
        let paths = &self.config.paths;
        let read_pairs = |p: &Path| load_parallel(p, CorpusFormat::from_path(p));
        let test = read_pairs(&paths.test)?;
        if test.is_empty() {
            return Err(PipelineError::Data(format!("test set {} is empty", paths.test.display())));
        }
        let all = read_pairs(&paths.corpus)?;
        let corpus_hash = content_hash(&all);
        let pool: Vec<ParallelPair> =
            all.into_iter().filter(|p| self.config.retrieval_corpus.includes(p.origin)).collect();
        let test_ids: HashSet<&str> = test.iter().map(|p| p.id.as_str()).collect();
        let leaked = pool.iter().filter(|p| test_ids.contains(p.id.as_str())).count();
        if leaked > 0 {
            return Err(PipelineError::Data(format!("{leaked} test ids also appear in the retrieval pool")));
        }
        let (lexicon, lexicon_hash) = match (&paths.lexicon, self.config.lexicon_mode) {
            (Some(p), LexiconMode::FuzzyN | LexiconMode::Full) => {
                let lex = load_lexicon(p)?;
                let h = hash_json(&lex);
                (lex, Some(h))
            }
            _ => (Vec::new(), None),
        };
        let (drafts, drafts_hash) = match (&paths.drafts, self.config.mode) {
            (Some(p), Mode::NmtOnly | Mode::PostEdit) => {
                let d = load_drafts(p)?;
                if let Some(missing) = test.iter().find(|t| !d.contains_key(&t.id)) {
                    return Err(PipelineError::Data(format!(
                        "no draft for test id `{}` in {}",
                        missing.id,
                        p.display()
                    )));
                }
                let h = hash_json(&d);
                (Some(d), Some(h))
            }
            _ => (None, None),
        };
        Ok(Prepared {
            test_hash: content_hash(&test),
            test,
            drafts,
            pool,
            lexicon,
            corpus_hash,
            lexicon_hash,
            drafts_hash,
        })
    }

    fn build_retriever(&self, data: &Prepared) -> Result<Retriever, PipelineError> {
        let c = &self.config;
        let pool = &data.pool;
        if c.context != ContextMode::None && pool.is_empty() {
            return Err(PipelineError::Data("retrieval pool is empty".into()));
        }
        Ok(match c.context {
            ContextMode::None => Retriever::None,
            ContextMode::StaticK => {
                let nt: Vec<&ParallelPair> = pool.iter().filter(|p| p.origin == Origin::NewTestament).collect();
                if nt.len() < c.k {
                    return Err(PipelineError::Data(format!("STATIC_K needs {} NT pairs, pool has {}", c.k, nt.len())));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(c.static_seed.unwrap_or_default());
                let picks = rand::seq::index::sample(&mut rng, nt.len(), c.k);
                Retriever::Static(
                    picks.iter().map(|i| RetrievedExample::new(nt[i].clone(), 0.0, Strategy::Static)).collect(),
                )
            }
            ContextMode::Bm25 => Retriever::Bm25(Bm25Index::build(pool, Bm25Params::default())),
            ContextMode::ChrfCw => Retriever::ChrfCw(ChrfCwIndex::build(
                pool,
                ChrfCwParams { gamma: c.chrf_cw_gamma, ..Default::default() },
            )),
            ContextMode::FuzzyWord => Retriever::Fuzzy(WordIndex::build(pool)),
            ContextMode::Dense => {
                let provider = self.provider.as_ref().expect("validated: dense needs a provider");
                let texts: Vec<String> = pool.iter().map(|p| p.source_text.clone()).collect();
                let batch = provider.embed(&texts)?;
                let index = EmbeddingIndex::build(pool, batch.vectors, provider.config().fingerprint())?;
                let queries: Vec<String> = data.test.iter().map(|p| p.source_text.clone()).collect();
                let qb = provider.embed(&queries)?;
                Retriever::Dense { index, queries: qb.inputs.into_iter().zip(qb.vectors).collect() }
            }
        })
    }

    fn lexicon_for(&self, data: &Prepared, full: &[RetrievedLexicon], source: &str) -> Vec<RetrievedLexicon> {
        match self.config.lexicon_mode {
            LexiconMode::None => Vec::new(),
            LexiconMode::Full => full.to_vec(),
            LexiconMode::FuzzyN => lexicon_fuzzy_retrieve(&data.lexicon, source, self.config.lexicon_n),
        }
    }

    fn render(
        &self,
        source: &str,
        draft: Option<&str>,
        bundle: &ContextBundle,
    ) -> Result<Option<RenderedPrompt>, PipelineError> {
        let profile = &self.config.language;
        Ok(match self.config.mode {
            Mode::NmtOnly => None,
            Mode::DirectLlm => Some(render_direct(source, bundle, profile)?),
            Mode::PostEdit => Some(render_postedit(source, draft.unwrap_or_default(), bundle, profile)?),
        })
    }

    fn process(
        &self,
        data: &Prepared,
        retriever: &Retriever,
        full_lex: &[RetrievedLexicon],
        pair: &ParallelPair,
    ) -> SentenceRecord {
        let draft = data.drafts.as_ref().map(|d| d[&pair.id].clone());
        let mut record = SentenceRecord {
            id: pair.id.clone(),
            source: pair.source_text.clone(),
            reference: pair.target_text.clone(),
            draft: draft.clone(),
            retrieved_ids: Vec::new(),
            lexicon_indices: Vec::new(),
            effective_k: 0,
            prompt_hash: None,
            prompt_bytes: None,
            cache_key: None,
            output: None,
            status: RecordStatus::Pending,
            bleu: None,
            chrf: None,
        };
        let result = (|| -> Result<String, PipelineError> {
            let examples = retriever.retrieve(&pair.source_text, self.config.k, self.config.n)?;
            let lexicon = self.lexicon_for(data, full_lex, &pair.source_text);
            record.retrieved_ids = examples.iter().map(|e| e.pair.id.clone()).collect();
            record.lexicon_indices = lexicon.iter().map(|l| l.entry_index).collect();
            record.effective_k = examples.len();
            let bundle = ContextBundle { examples, lexicon };
            let Some(prompt) = self.render(&pair.source_text, draft.as_deref(), &bundle)? else {
                return Ok(draft.clone().unwrap_or_default());
            };
            record.prompt_hash = Some(prompt.fingerprint());
            record.prompt_bytes = Some(prompt.total_len());
            let provider = self.provider.as_ref().expect("validated: LLM modes have a provider");
            record.cache_key = Some(provider.request_for(&prompt).cache_key());
            let exchange = provider.complete(&prompt)?;
            Ok(exchange.response_text)
        })();
        match result {
            Ok(out) => {
                record.output = Some(out);
                record.status = RecordStatus::Ok;
            }
            Err(e) => {
                warn!("{}: {e}", pair.id);
                record.status = RecordStatus::Failed { error: e.to_string() };
            }
        }
        record
    }

    /// Renders the prompts of the selected test ids (all when `ids` is empty)
    /// without sending any completion request. DENSE context still embeds.
    pub fn preview(&self, ids: &[String]) -> Result<Vec<(String, Option<RenderedPrompt>)>, PipelineError> {
        let data = self.prepare()?;
        if let Some(missing) = ids.iter().find(|id| !data.test.iter().any(|p| &p.id == *id)) {
            return Err(PipelineError::Data(format!("unknown test id `{missing}`")));
        }
        let retriever = self.build_retriever(&data)?;
        let full_lex = lexicon_full(&data.lexicon);
        data.test
            .iter()
            .filter(|p| ids.is_empty() || ids.contains(&p.id))
            .map(|pair| {
                let examples = retriever.retrieve(&pair.source_text, self.config.k, self.config.n)?;
                let lexicon = self.lexicon_for(&data, &full_lex, &pair.source_text);
                let draft = data.drafts.as_ref().map(|d| d[&pair.id].as_str());
                let prompt = self.render(&pair.source_text, draft, &ContextBundle { examples, lexicon })?;
                Ok((pair.id.clone(), prompt))
            })
            .collect()
    }

    /// Rebuilds the prompt of a manifest record from its stored ids.
    pub fn rerender(&self, record: &SentenceRecord) -> Result<Option<RenderedPrompt>, PipelineError> {
        let data = self.prepare()?;
        let by_id: HashMap<&str, &ParallelPair> = data.pool.iter().map(|p| (p.id.as_str(), p)).collect();
        let examples = record
            .retrieved_ids
            .iter()
            .map(|id| {
                let p = by_id.get(id.as_str()).ok_or_else(|| PipelineError::Data(format!("unknown pair id `{id}`")))?;
                Ok(RetrievedExample::new((*p).clone(), 0.0, Strategy::Static))
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let lexicon = record
            .lexicon_indices
            .iter()
            .map(|&i| {
                let entry = data
                    .lexicon
                    .get(i)
                    .ok_or_else(|| PipelineError::Data(format!("lexicon index {i} out of range")))?;
                Ok(RetrievedLexicon { entry: entry.clone(), entry_index: i, score: 0.0, query_word: String::new() })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        self.render(&record.source, record.draft.as_deref(), &ContextBundle { examples, lexicon })
    }

    pub fn run(&self, opts: &RunOptions) -> Result<RunOutput, PipelineError> {
        let data = self.prepare()?;
        let c = &self.config;
        let config_fingerprint = hash_json(&FingerprintInput {
            config: &ExperimentConfig { label: None, provider: None, paths: Default::default(), ..c.clone() },
            provider: self.provider.as_ref().map(|p| p.config().fingerprint()),
            tokenizer: self.tokenizer.name(),
            corpus_hash: &data.corpus_hash,
            test_hash: &data.test_hash,
            lexicon_hash: data.lexicon_hash.as_deref(),
            drafts_hash: data.drafts_hash.as_deref(),
        });

        let mut previous: HashMap<String, SentenceRecord> = HashMap::new();
        if let (true, Some(path)) = (opts.resume, &opts.manifest_path) {
            if path.exists() {
                let old = RunManifest::load(path)?;
                if old.config_fingerprint != config_fingerprint {
                    return Err(PipelineError::Config(format!(
                        "{} was written by a different configuration; refusing to resume",
                        path.display()
                    )));
                }
                previous = old
                    .records
                    .into_iter()
                    .filter(|r| r.status == RecordStatus::Ok)
                    .map(|r| (r.id.clone(), r))
                    .collect();
                info!("resuming: {} of {} sentences already done", previous.len(), data.test.len());
            }
        }

        let retriever = self.build_retriever(&data)?;
        let full_lex = if c.lexicon_mode == LexiconMode::Full { lexicon_full(&data.lexicon) } else { Vec::new() };

        let slots: Vec<Mutex<Option<SentenceRecord>>> =
            data.test.iter().map(|p| Mutex::new(previous.remove(&p.id))).collect();
        let todo: Vec<usize> = (0..data.test.len()).filter(|&i| slots[i].lock().unwrap().is_none()).collect();
        let workers = self.provider.as_ref().map_or(1, |p| p.config().max_in_flight).min(todo.len()).max(1);
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let j = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = todo.get(j) else { break };
                    let rec = self.process(&data, &retriever, &full_lex, &data.test[i]);
                    if rec.status != RecordStatus::Ok {
                        abort.store(true, Ordering::SeqCst);
                    }
                    *slots[i].lock().unwrap() = Some(rec);
                });
            }
        });

        let mut records: Vec<SentenceRecord> = slots
            .into_iter()
            .zip(&data.test)
            .map(|(slot, pair)| {
                slot.into_inner().unwrap().unwrap_or_else(|| SentenceRecord {
                    id: pair.id.clone(),
                    source: pair.source_text.clone(),
                    reference: pair.target_text.clone(),
                    draft: data.drafts.as_ref().map(|d| d[&pair.id].clone()),
                    retrieved_ids: Vec::new(),
                    lexicon_indices: Vec::new(),
                    effective_k: 0,
                    prompt_hash: None,
                    prompt_bytes: None,
                    cache_key: None,
                    output: None,
                    status: RecordStatus::Pending,
                    bleu: None,
                    chrf: None,
                })
            })
            .collect();

        let mut per_sentence = Vec::with_capacity(records.len());
        for r in records.iter_mut().filter(|r| r.status == RecordStatus::Ok) {
            let hyp = r.output.as_deref().unwrap_or_default().trim();
            let bleu_stats = metrics::bleu_sentence_stats(hyp, &r.reference, self.tokenizer.as_ref());
            let chrf_stats = metrics::chrf_sentence_stats(hyp, &r.reference, &c.chrf);
            let score = SentenceScore {
                id: r.id.clone(),
                bleu: bleu_stats.score(),
                chrf: metrics::chrf_f_score(&chrf_stats, &c.chrf),
                bleu_stats,
                chrf_stats,
            };
            r.bleu = Some(score.bleu);
            r.chrf = Some(score.chrf);
            per_sentence.push(score);
        }

        let manifest = RunManifest {
            format_version: MANIFEST_VERSION,
            label: c.display_label(),
            config_fingerprint: config_fingerprint.clone(),
            corpus_hash: data.corpus_hash.clone(),
            test_set_fingerprint: data.test_hash.clone(),
            lexicon_hash: data.lexicon_hash.clone(),
            drafts_hash: data.drafts_hash.clone(),
            effective_k: EffectiveK::of(records.iter().map(|r| r.effective_k)),
            records,
        };
        if let Some(path) = &opts.manifest_path {
            manifest.save(path)?;
        }
        let failures: Vec<&SentenceRecord> = manifest.failed().collect();
        if let Some(first) = failures.iter().find(|r| matches!(r.status, RecordStatus::Failed { .. })) {
            let RecordStatus::Failed { error } = &first.status else { unreachable!() };
            return Err(PipelineError::Aborted {
                id: first.id.clone(),
                error: error.clone(),
                incomplete: failures.len(),
                manifest: opts.manifest_path.clone(),
            });
        }

        let mut pooled_bleu = BleuStats::default();
        for s in &per_sentence {
            pooled_bleu.add(&s.bleu_stats);
        }
        let hyps: Vec<&str> = manifest.records.iter().map(|r| r.output.as_deref().unwrap_or_default().trim()).collect();
        let refs: Vec<&str> = manifest.records.iter().map(|r| r.reference.as_str()).collect();
        let corpus_chrf = metrics::corpus_chrf(&hyps, &refs, &c.chrf)?;
        let report = EvalReport {
            label: manifest.label.clone(),
            mode: c.mode,
            context: c.context,
            k_or_n: (c.context != ContextMode::None).then(|| c.k_or_n()),
            lexicon_mode: c.lexicon_mode,
            corpus_bleu: pooled_bleu.score(),
            corpus_chrf,
            bleu_label: bleu_label(self.tokenizer.as_ref()).to_string(),
            tokenizer: self.tokenizer.name(),
            bleu_smoothing: format!("zero match counts floored to {:e}", metrics::SMOOTHING_EPSILON),
            chrf_params: c.chrf,
            model: self.provider.as_ref().map(|p| p.config().model_name.clone()),
            temperature: self.provider.as_ref().map(|p| p.config().temperature),
            effective_k_mean: manifest.effective_k.mean,
            config_fingerprint,
            test_set_fingerprint: data.test_hash.clone(),
            per_sentence,
        };
        info!(
            "{}: {} {:.2}, chrF++ {:.2}, mean effective k {:.1}",
            report.label, report.bleu_label, report.corpus_bleu, report.corpus_chrf, report.effective_k_mean
        );
        Ok(RunOutput { report, manifest })
    }
}

/// Validates, loads, retrieves, prompts, and scores one configuration.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, PipelineError> {
    Runner::new(config.clone())?.run(opts)
}
