use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use postedit::analysis::{build_vocab, oov_rate, term_frequency, DefaultWordTokenizer, OovMode, TermFrequencyReport};
use postedit::corpus::{
    content_hash, leakage_check, load_lexicon, load_parallel, partition, write_parallel, CorpusFormat, Origin,
    ParallelPair, PartitionSpec, RetrievalCorpus,
};
use postedit::metrics::{self, ChrfParams, SubwordTokenizer, UnigramTokenizer, WhitespaceTokenizer};
use postedit::pipeline::{
    compare, read_json, sweep, write_json, write_sweep_csv, ContextMode, EvalReport, ExperimentConfig, RunOptions,
    Runner, SweepOptions,
};
use postedit::provider::{Provider, ProviderConfig, ProviderKind};
use postedit::retrieval::{
    load_index, save_index, Bm25Index, Bm25Params, ChrfCwIndex, ChrfCwParams, EmbeddingIndex, IndexKey, RetrievalError,
    RetrievedExample, Strategy, WordIndex,
};

type Result<T = ()> = std::result::Result<T, Box<dyn std::error::Error>>;

/// Retrieval-augmented LLM post-editing of NMT drafts, with chrF++/BLEU evaluation.
#[derive(Parser)]
#[command(name = "postedit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, split, and leak-check parallel corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Domain-shift statistics.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Retrieve in-context examples for queries.
    Retrieve(RetrieveArgs),
    /// Render prompts.
    #[command(subcommand)]
    Prompt(PromptCmd),
    /// Score hypotheses against references.
    Score(ScoreArgs),
    /// Run one experiment config.
    Run(RunArgs),
    /// Run one config across several k (or n) values.
    Sweep(SweepArgs),
    /// Tabulate reports against a baseline.
    Compare(CompareArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Parses a corpus (and lexicon) and prints counts and a content hash.
    Validate {
        corpus: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Writes train/validation/test TSVs: shuffled NT rows and the first verses of the test book.
    Split {
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        train_frac: f64,
        #[arg(long, default_value = "Genesis")]
        test_book: String,
        #[arg(long, default_value_t = 500)]
        test_verses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Receives train.tsv, validation.tsv and test.tsv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Exits with status 1 when a test pair also occurs in an auxiliary corpus.
    LeakCheck {
        #[arg(long)]
        test: PathBuf,
        #[arg(long, required = true)]
        aux: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// OOV rate of the eval texts against the training vocabulary.
    Oov {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, value_enum, default_value_t = Side::Source)]
        side: Side,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-10k frequencies of the listed terms.
    Termfreq {
        /// One term per line.
        #[arg(long)]
        terms_file: PathBuf,
        /// `label=path` of a corpus file; repeatable.
        #[arg(long = "corpus", required = true, value_parser = parse_labeled)]
        corpora: Vec<(String, PathBuf)>,
        #[arg(long, value_enum, default_value_t = Side::Source)]
        side: Side,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Source,
    Target,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value = "nt+grammar")]
    corpus: RetrievalCorpus,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Query sentence; repeatable.
    #[arg(long)]
    query: Vec<String>,
    /// File with one query per line.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Directory for persisted BM25 and dense indices.
    #[arg(long)]
    index_dir: Option<PathBuf>,
    /// Provider config JSON, needed by dense retrieval.
    #[arg(long)]
    provider: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PromptCmd {
    /// Print the prompts a config would send.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's mode.
        #[arg(long)]
        mode: Option<String>,
        /// Test ids to render; all when omitted.
        #[arg(long)]
        id: Vec<String>,
        /// Only render; never contact the provider.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Args)]
struct ScoreArgs {
    /// One hypothesis per line.
    #[arg(long)]
    hyp: PathBuf,
    /// One reference per line.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// SentencePiece `.vocab` file; enables spBLEU.
    #[arg(long)]
    tokenizer_model: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    resume: bool,
    /// Where the report JSON goes; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, value_delimiter = ',', conflicts_with = "k")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    resume: bool,
    /// Sweep CSV; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Label of the baseline report.
    #[arg(long)]
    baseline: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_labeled(s: &str) -> std::result::Result<(String, PathBuf), String> {
    s.split_once('=')
        .map(|(l, p)| (l.to_string(), PathBuf::from(p)))
        .ok_or_else(|| format!("expected label=path, got `{s}`"))
}

fn load_pairs(path: &Path) -> Result<Vec<ParallelPair>> {
    Ok(load_parallel(path, CorpusFormat::from_path(path))?)
}

fn side_texts(pairs: &[ParallelPair], side: Side) -> Vec<&str> {
    pairs
        .iter()
        .map(|p| match side {
            Side::Source => p.source_text.as_str(),
            Side::Target => p.target_text.as_str(),
        })
        .collect()
}

fn print_json<T: Serialize>(value: &T) -> Result {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

fn csv_out(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn corpus_cmd(cmd: CorpusCmd) -> Result<ExitCode> {
    match cmd {
        CorpusCmd::Validate { corpus, lexicon } => {
            let pairs = load_pairs(&corpus)?;
            let count = |o: Origin| pairs.iter().filter(|p| p.origin == o).count();
            let lexicon_entries = lexicon.as_deref().map(load_lexicon).transpose()?.map(|l| l.len());
            print_json(&json!({
                "pairs": pairs.len(),
                "NT": count(Origin::NewTestament),
                "OT": count(Origin::OldTestament),
                "GRAMMAR": count(Origin::Grammar),
                "content_hash": content_hash(&pairs),
                "lexicon_entries": lexicon_entries,
            }))?;
        }
        CorpusCmd::Split { corpus, train_frac, test_book, test_verses, seed, out_dir } => {
            let spec = PartitionSpec { train_fraction: train_frac, test_book, test_verses, seed };
            let part = partition(&load_pairs(&corpus)?, &spec)?;
            fs::create_dir_all(&out_dir)?;
            for (name, pairs) in [("train", &part.train), ("validation", &part.validation), ("test", &part.test)] {
                write_parallel(csv_out(&out_dir.join(format!("{name}.tsv")))?, pairs, CorpusFormat::Tsv)?;
            }
            print_json(&json!({
                "train": part.train.len(),
                "validation": part.validation.len(),
                "test": part.test.len(),
                "partition": spec,
            }))?;
        }
        CorpusCmd::LeakCheck { test, aux } => {
            let test = load_pairs(&test)?;
            let mut pool = Vec::new();
            for p in &aux {
                pool.extend(load_pairs(p)?);
            }
            let report = leakage_check(&test, &pool);
            print_json(&report)?;
            if !report.is_clean() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze_cmd(cmd: AnalyzeCmd) -> Result {
    let tok = DefaultWordTokenizer;
    match cmd {
        AnalyzeCmd::Oov { train, eval, side, csv } => {
            let train = load_pairs(&train)?;
            let eval = load_pairs(&eval)?;
            let vocab = build_vocab(&side_texts(&train, side), &tok);
            let reports: Vec<_> = [OovMode::Token, OovMode::Type]
                .into_iter()
                .map(|m| oov_rate(&vocab, &side_texts(&eval, side), &tok, m))
                .collect();
            if let Some(path) = csv {
                let mut w = csv::Writer::from_writer(csv_out(&path)?);
                for r in &reports {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            print_json(
                &json!({ "vocab_types": vocab.tokens.len(), "vocab_tokens": vocab.token_count, "oov": reports }),
            )?;
        }
        AnalyzeCmd::Termfreq { terms_file, corpora, side, csv } => {
            let terms: Vec<String> = lines(&terms_file)?.into_iter().filter(|t| !t.trim().is_empty()).collect();
            if terms.is_empty() {
                return Err(format!("{} lists no terms", terms_file.display()).into());
            }
            let mut report = TermFrequencyReport::default();
            for (label, path) in &corpora {
                let pairs = load_pairs(path)?;
                report.merge(term_frequency(label, &side_texts(&pairs, side), &terms, &tok));
            }
            if let Some(path) = csv {
                report.write_csv(csv_out(&path)?)?;
            }
            print_json(&report)?;
        }
    }
    Ok(())
}

fn cached<T, F>(dir: Option<&Path>, key: &IndexKey, build: F) -> Result<T>
where
    T: Serialize + serde::de::DeserializeOwned,
    F: FnOnce() -> Result<T>,
{
    if let Some(dir) = dir {
        if let Some(index) = load_index(dir, key)? {
            log::info!("loaded {} index from {}", key.strategy, dir.display());
            return Ok(index);
        }
    }
    let index = build()?;
    if let Some(dir) = dir {
        save_index(dir, key, &index)?;
    }
    Ok(index)
}

fn retrieve_cmd(a: RetrieveArgs) -> Result {
    let mut queries = a.query.clone();
    if let Some(p) = &a.queries {
        queries.extend(lines(p)?.into_iter().filter(|l| !l.trim().is_empty()));
    }
    if queries.is_empty() {
        return Err("give --query or --queries".into());
    }
    let all = load_pairs(&a.pool)?;
    let hash = content_hash(&all);
    let pool: Vec<ParallelPair> = all.into_iter().filter(|p| a.corpus.includes(p.origin)).collect();
    let dir = a.index_dir.as_deref();
    let key_for = |params: serde_json::Value, provider: Option<&str>| {
        IndexKey::new(&hash, a.strategy.as_str(), &(params, a.corpus), provider)
    };

    let results: Vec<std::result::Result<Vec<RetrievedExample>, RetrievalError>> = match a.strategy {
        Strategy::Bm25 => {
            let params = Bm25Params::default();
            let idx: Bm25Index = cached(dir, &key_for(json!(params), None), || Ok(Bm25Index::build(&pool, params)))?;
            queries.iter().map(|q| idx.retrieve(q, a.k)).collect()
        }
        Strategy::ChrfCw => {
            let idx = ChrfCwIndex::build(&pool, ChrfCwParams { gamma: a.gamma, ..Default::default() });
            queries.iter().map(|q| idx.retrieve(q, a.k)).collect()
        }
        Strategy::FuzzyWord => {
            let idx = WordIndex::build(&pool);
            queries.iter().map(|q| Ok(idx.retrieve(q, a.n))).collect()
        }
        Strategy::Dense => {
            let path = a.provider.as_ref().ok_or("dense retrieval needs --provider <config.json>")?;
            let config: ProviderConfig = read_json(path)?;
            let provider = Provider::from_config(config)?;
            let fp = provider.config().fingerprint();
            let idx: EmbeddingIndex = cached(dir, &key_for(json!(null), Some(&fp)), || {
                let texts: Vec<String> = pool.iter().map(|p| p.source_text.clone()).collect();
                Ok(EmbeddingIndex::build(&pool, provider.embed(&texts)?.vectors, fp.clone())?)
            })?;
            let qv = provider.embed(&queries)?.vectors;
            qv.iter().map(|v| idx.retrieve(v, a.k)).collect()
        }
        Strategy::Static => return Err("static examples are chosen per run; use `run`".into()),
    };

    let mut out = io::stdout().lock();
    for (q, r) in queries.iter().zip(results) {
        let row = match r {
            Ok(hits) => json!({
                "query": q,
                "results": hits.iter().map(|h| json!({
                    "id": h.pair.id,
                    "score": h.score,
                    "matched_token": h.matched_token,
                })).collect::<Vec<_>>(),
            }),
            Err(e) => json!({ "query": q, "error": e.to_string() }),
        };
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn prompt_cmd(cmd: PromptCmd) -> Result {
    let PromptCmd::Render { config, mode, id, dry_run } = cmd;
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(m) = mode {
        cfg.mode = serde_json::from_value(json!(m.to_ascii_uppercase().replace('-', "_")))?;
    }
    if dry_run {
        // completions are never requested; dense context can still reuse cached embeddings
        if let Some(p) = cfg.provider.as_mut() {
            p.kind = ProviderKind::Replay;
            p.cache_dir.get_or_insert_with(|| std::env::temp_dir().join("postedit-dry-run"));
        }
    } else if cfg.context == ContextMode::Dense {
        log::info!("dense context embeds pool and queries through the provider");
    }
    let runner = Runner::new(cfg)?;
    let mut out = io::stdout().lock();
    for (id, prompt) in runner.preview(&id)? {
        match prompt {
            None => writeln!(out, "=== {id}: no prompt (NMT_ONLY)")?,
            Some(p) => {
                writeln!(out, "=== {id} [{}] {} bytes, {}", p.mode, p.total_len(), &p.fingerprint()[..12])?;
                writeln!(out, "--- system\n{}\n--- user\n{}", p.system, p.user)?;
            }
        }
    }
    Ok(())
}

fn score_cmd(a: ScoreArgs) -> Result {
    let hyps = lines(&a.hyp)?;
    let refs = lines(&a.reference)?;
    let tokenizer: Box<dyn SubwordTokenizer> = match &a.tokenizer_model {
        Some(p) => Box::new(UnigramTokenizer::from_vocab_file(p)?),
        None => Box::new(WhitespaceTokenizer),
    };
    let params = ChrfParams::default();
    let bleu = metrics::corpus_bleu(&hyps, &refs, tokenizer.as_ref())?;
    let chrf = metrics::corpus_chrf(&hyps, &refs, &params)?;
    let sentences: Vec<_> = hyps
        .iter()
        .zip(&refs)
        .enumerate()
        .map(|(i, (h, r))| {
            json!({
                "line": i + 1,
                "bleu": metrics::bleu_sentence_stats(h, r, tokenizer.as_ref()).score(),
                "chrf": metrics::chrf_pp(h, r, &params),
            })
        })
        .collect();
    let summary = json!({
        "bleu_label": bleu.label,
        "tokenizer": bleu.tokenizer,
        "bleu": bleu.score,
        "chrf": chrf,
        "chrf_params": params,
        "sentences": hyps.len(),
    });
    if let Some(p) = &a.csv {
        let mut w = csv::Writer::from_writer(csv_out(p)?);
        w.write_record(["line", bleu.label.as_str(), "chrF++"])?;
        for s in &sentences {
            w.write_record([s["line"].to_string(), s["bleu"].to_string(), s["chrf"].to_string()])?;
        }
        w.flush()?;
    }
    if let Some(p) = &a.json {
        write_json(p, &json!({ "corpus": summary, "per_sentence": sentences }))?;
    }
    print_json(&summary)?;
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result {
    let cfg = ExperimentConfig::load(&a.config)?;
    let out = Runner::new(cfg)?.run(&RunOptions { manifest_path: a.manifest, resume: a.resume })?;
    let r = &out.report;
    eprintln!(
        "{}: {} {:.2}  chrF++ {:.2}  effective k {:.1}",
        r.label, r.bleu_label, r.corpus_bleu, r.corpus_chrf, r.effective_k_mean
    );
    match a.report {
        Some(p) => write_json(&p, r)?,
        None => print_json(r)?,
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = &a.strategy {
        cfg.context = s.parse()?;
    }
    let values = if a.n.is_empty() { a.k } else { a.n };
    let result = sweep(&cfg, &values, &SweepOptions { out_dir: a.out_dir, resume: a.resume, provider: None })?;
    match a.csv {
        Some(p) => write_sweep_csv(csv_out(&p)?, &result)?,
        None => write_sweep_csv(io::stdout().lock(), &result)?,
    }
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result {
    let reports = a.reports.iter().map(|p| read_json::<EvalReport>(p)).collect::<std::result::Result<Vec<_>, _>>()?;
    let table = compare(&reports, &a.baseline)?;
    print!("{}", table.render());
    if let Some(p) = a.csv {
        table.write_csv(csv_out(&p)?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Corpus(c) => corpus_cmd(c),
        Command::Analyze(c) => analyze_cmd(c).map(|_| ExitCode::SUCCESS),
        Command::Retrieve(a) => retrieve_cmd(a).map(|_| ExitCode::SUCCESS),
        Command::Prompt(c) => prompt_cmd(c).map(|_| ExitCode::SUCCESS),
        Command::Score(a) => score_cmd(a).map(|_| ExitCode::SUCCESS),
        Command::Run(a) => run_cmd(a).map(|_| ExitCode::SUCCESS),
        Command::Sweep(a) => sweep_cmd(a).map(|_| ExitCode::SUCCESS),
        Command::Compare(a) => compare_cmd(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
