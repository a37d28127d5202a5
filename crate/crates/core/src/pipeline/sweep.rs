use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::EvalReport;
use super::run::{RunOptions, Runner};
use super::PipelineError;
use crate::metrics::{bleu_label, UnigramTokenizer, WhitespaceTokenizer};
use crate::provider::Provider;

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Receives `<label>.manifest.json` and `<label>.report.json` per cell.
    pub out_dir: Option<PathBuf>,
    pub resume: bool,
    /// Used instead of a provider built from the base config.
    pub provider: Option<Arc<Provider>>,
}

/// One CSV row. Scores are absent for failed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub k_or_n: usize,
    pub effective_k_mean: Option<f64>,
    pub bleu: Option<f64>,
    pub chrf: Option<f64>,
    /// `ok` or `failed: <reason>`.
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub bleu_label: String,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<EvalReport>,
}

/// Runs `base` once per value of `k` (or `n` for FUZZY_WORD) with a single
/// shared provider. A failing cell is recorded and the sweep goes on.
pub fn sweep(base: &ExperimentConfig, values: &[usize], opts: &SweepOptions) -> Result<SweepResult, PipelineError> {
    if values.is_empty() {
        return Err(PipelineError::Config("sweep needs at least one value".into()));
    }
    let label = match &base.paths.tokenizer_model {
        Some(p) => bleu_label(&UnigramTokenizer::from_vocab_file(p)?),
        None => bleu_label(&WhitespaceTokenizer),
    };
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.set_k_or_n(v);
            c.label = Some(match &base.label {
                Some(l) => format!("{l}@{v}"),
                None => ExperimentConfig { label: None, ..c.clone() }.display_label(),
            });
            c
        })
        .collect();
    let mut first = Runner::new(configs[0].clone())?;
    if let Some(p) = &opts.provider {
        first = first.with_provider(Arc::clone(p));
    }
    let shared = first.provider().cloned();
    let mut runners = vec![first];
    for c in &configs[1..] {
        let r = Runner::new(c.clone())?;
        runners.push(match &shared {
            Some(p) => r.with_provider(Arc::clone(p)),
            None => r,
        });
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (runner, value) in runners.iter().zip(values) {
        let cfg = runner.config();
        let cell = cfg.display_label();
        let run_opts = RunOptions {
            manifest_path: opts.out_dir.as_ref().map(|d| d.join(format!("{cell}.manifest.json"))),
            resume: opts.resume,
        };
        let strategy = cfg.context.as_str().to_string();
        match runner.run(&run_opts) {
            Ok(out) => {
                if let Some(dir) = &opts.out_dir {
                    super::write_json(&dir.join(format!("{cell}.report.json")), &out.report)?;
                }
                rows.push(SweepRow {
                    strategy,
                    k_or_n: *value,
                    effective_k_mean: Some(out.report.effective_k_mean),
                    bleu: Some(out.report.corpus_bleu),
                    chrf: Some(out.report.corpus_chrf),
                    status: "ok".into(),
                });
                reports.push(out.report);
            }
            Err(e) => {
                log::error!("sweep cell {cell}: {e}");
                rows.push(SweepRow {
                    strategy,
                    k_or_n: *value,
                    effective_k_mean: None,
                    bleu: None,
                    chrf: None,
                    status: format!("failed: {e}"),
                });
            }
        }
    }
    Ok(SweepResult { bleu_label: label.to_string(), rows, reports })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns `strategy,k_or_n,effective_k_mean,<BLEU label>,chrF++,status`.
/// Numbers are written at full precision so they read back exactly.
pub fn write_sweep_csv<W: std::io::Write>(out: W, result: &SweepResult) -> Result<(), PipelineError> {
    let err = |e: csv::Error| PipelineError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "k_or_n", "effective_k_mean", result.bleu_label.as_str(), "chrF++", "status"])
        .map_err(err)?;
    for r in &result.rows {
        w.write_record([
            r.strategy.clone(),
            r.k_or_n.to_string(),
            opt(r.effective_k_mean),
            opt(r.bleu),
            opt(r.chrf),
            r.status.clone(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| PipelineError::Csv(e.to_string()))
}

/// Inverse of [`write_sweep_csv`]: the BLEU column label and the rows.
pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<(String, Vec<SweepRow>), PipelineError> {
    let err = |e: csv::Error| PipelineError::Csv(e.to_string());
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(err)?.clone();
    if headers.len() != 6 || &headers[0] != "strategy" || &headers[4] != "chrF++" {
        return Err(PipelineError::Csv(format!("unexpected header {headers:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>, PipelineError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| PipelineError::Csv(format!("bad number `{s}`")))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        rows.push(SweepRow {
            strategy: rec[0].to_string(),
            k_or_n: rec[1].parse().map_err(|_| PipelineError::Csv(format!("bad k_or_n `{}`", &rec[1])))?,
            effective_k_mean: num(&rec[2])?,
            bleu: num(&rec[3])?,
            chrf: num(&rec[4])?,
            status: rec[5].to_string(),
        });
    }
    Ok((headers[3].to_string(), rows))
}
