use serde::{Deserialize, Serialize};

use super::report::EvalReport;
use super::PipelineError;

/// A score in integer hundredths, the precision of result tables.
pub fn hundredths(score: f64) -> i64 {
    (score * 100.0).round() as i64
}

/// `(+8.10)`, `(-0.07)`, `(+0.00)`.
pub fn format_delta(delta: i64) -> String {
    let sign = if delta < 0 { '-' } else { '+' };
    let a = delta.unsigned_abs();
    format!("({sign}{}.{:02})", a / 100, a % 100)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    /// Scores in hundredths.
    pub bleu: i64,
    pub chrf: i64,
    pub bleu_delta: i64,
    pub chrf_delta: i64,
    pub is_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareTable {
    pub bleu_label: String,
    pub baseline: String,
    /// Sorted by chrF++ descending, then label.
    pub rows: Vec<CompareRow>,
}

fn fixed(h: i64) -> String {
    let sign = if h < 0 { "-" } else { "" };
    let a = h.unsigned_abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

impl CompareTable {
    pub fn row(&self, label: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned plain-text table with delta annotations.
    pub fn render(&self) -> String {
        let cell = |v: i64, d: i64, base: bool| {
            if base {
                fixed(v)
            } else {
                format!("{} {}", fixed(v), format_delta(d))
            }
        };
        let body: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| {
                [r.label.clone(), cell(r.bleu, r.bleu_delta, r.is_baseline), cell(r.chrf, r.chrf_delta, r.is_baseline)]
            })
            .collect();
        let head = ["Configuration".to_string(), self.bleu_label.clone(), "chrF++".to_string()];
        let mut widths = [0; 3];
        for row in std::iter::once(&head).chain(&body) {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&head).chain(&body) {
            let line = format!(
                "{:<w0$}  {:>w1$}  {:>w2$}",
                row[0],
                row[1],
                row[2],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(out);
        let bl = &self.bleu_label;
        w.write_record(["label", bl.as_str(), &format!("{bl}_delta"), "chrF++", "chrF++_delta", "baseline"])
            .map_err(|e| PipelineError::Csv(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                fixed(r.bleu),
                format_delta(r.bleu_delta),
                fixed(r.chrf),
                format_delta(r.chrf_delta),
                r.is_baseline.to_string(),
            ])
            .map_err(|e| PipelineError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| PipelineError::Csv(e.to_string()))
    }
}

/// Ranks reports by chrF++ and annotates each with its difference from the
/// report labelled `baseline`. Deltas are taken between the two-decimal
/// values, so they agree with the printed scores.
pub fn compare(reports: &[EvalReport], baseline: &str) -> Result<CompareTable, PipelineError> {
    if reports.len() < 2 {
        return Err(PipelineError::Compare("need at least two reports".into()));
    }
    let first = &reports[0];
    for r in reports {
        if r.test_set_fingerprint != first.test_set_fingerprint {
            return Err(PipelineError::Compare(format!(
                "`{}` and `{}` were scored on different test sets",
                first.label, r.label
            )));
        }
        if r.bleu_label != first.bleu_label {
            return Err(PipelineError::Compare(format!(
                "`{}` reports {} but `{}` reports {}",
                first.label, first.bleu_label, r.label, r.bleu_label
            )));
        }
    }
    let base = reports
        .iter()
        .find(|r| r.label == baseline)
        .ok_or_else(|| PipelineError::Compare(format!("no report labelled `{baseline}`")))?;
    let (bb, bc) = (hundredths(base.corpus_bleu), hundredths(base.corpus_chrf));
    let mut rows: Vec<CompareRow> = reports
        .iter()
        .map(|r| {
            let (b, c) = (hundredths(r.corpus_bleu), hundredths(r.corpus_chrf));
            CompareRow {
                label: r.label.clone(),
                bleu: b,
                chrf: c,
                bleu_delta: b - bb,
                chrf_delta: c - bc,
                is_baseline: r.label == baseline,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.chrf.cmp(&a.chrf).then_with(|| a.label.cmp(&b.label)));
    Ok(CompareTable { bleu_label: first.bleu_label.clone(), baseline: baseline.to_string(), rows })
}
