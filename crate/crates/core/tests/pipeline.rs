mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use common::demo;
use common::mock_server::{chat_reply, MockServer};
use postedit::pipeline::{
    compare, format_delta, read_sweep_csv, sweep, write_sweep_csv, DataPaths, EvalReport, ExperimentConfig, Mode,
    PipelineError, RecordStatus, RunManifest, RunOptions, Runner, SweepOptions,
};

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn tiny_data(dir: &Path, drafts: &str) -> DataPaths {
    DataPaths {
        corpus: write(
            dir,
            "corpus.tsv",
            "id\tsource\ttarget\torigin\nMAT.1.1\tthe book\tnee buku\tNT\nMAT.1.2\ta man\tsa ata\tNT\n",
        ),
        test: write(
            dir,
            "test.tsv",
            "id\tsource\ttarget\torigin\nGEN.1.1\tthe man\tnee ata ngèru\tOT\nGEN.1.2\ta book\tsa buku\tOT\n",
        ),
        drafts: Some(write(dir, "drafts.tsv", drafts)),
        ..Default::default()
    }
}

fn replay_run(name: &str) -> (Runner, postedit::pipeline::RunOutput) {
    let runner = Runner::new(demo::config(name)).unwrap();
    let out = runner.run(&RunOptions::default()).unwrap();
    (runner, out)
}

#[test]
fn nmt_only_scores_the_drafts() {
    let dir = tempfile::tempdir().unwrap();
    let paths = tiny_data(dir.path(), "id\tdraft\nGEN.1.1\tnee ata ngèru\nGEN.1.2\tsa buku\n");
    let runner = Runner::new(ExperimentConfig::new(Mode::NmtOnly, paths)).unwrap();
    assert!(runner.provider().is_none());
    let out = runner.run(&RunOptions::default()).unwrap();
    assert_eq!(out.report.corpus_bleu, 100.0);
    assert_eq!(out.report.corpus_chrf, 100.0);
    assert_eq!(out.report.label, "nmt-only");
    assert!(out.manifest.records.iter().all(|r| r.prompt_hash.is_none() && r.status == RecordStatus::Ok));
}

#[test]
fn missing_draft_and_pool_overlap_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let paths = tiny_data(dir.path(), "id\tdraft\nGEN.1.1\tnee ata\n");
    let err = Runner::new(ExperimentConfig::new(Mode::NmtOnly, paths.clone())).unwrap().run(&RunOptions::default());
    assert!(matches!(err, Err(PipelineError::Data(m)) if m.contains("GEN.1.2")));

    let mut leaky = tiny_data(dir.path(), "id\tdraft\nGEN.1.1\tx\nGEN.1.2\ty\n");
    leaky.corpus = write(
        dir.path(),
        "leaky.tsv",
        "id\tsource\ttarget\torigin\nMAT.1.1\tthe book\tnee buku\tNT\nGEN.1.2\ta book\tsa buku\tNT\n",
    );
    let mut cfg = demo::config("postedit_bm25");
    cfg.paths = leaky;
    assert!(matches!(Runner::new(cfg).unwrap().run(&RunOptions::default()), Err(PipelineError::Data(_))));
}

#[test]
fn demo_replay_is_deterministic() {
    for name in demo::config_names() {
        let (_, a) = replay_run(&name);
        let (_, b) = replay_run(&name);
        assert_eq!(serde_json::to_string(&a.manifest).unwrap(), serde_json::to_string(&b.manifest).unwrap(), "{name}");
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap(), "{name}");
        let (bleu, chrf) = a.report.recompute();
        assert!((bleu - a.report.corpus_bleu).abs() < 1e-9 && (chrf - a.report.corpus_chrf).abs() < 1e-9, "{name}");
    }
}

#[test]
fn manifest_prompts_can_be_rebuilt() {
    for name in
        ["final", "postedit_bm25", "postedit_dense", "postedit_chrf_cw", "direct_5shot", "postedit_lexicon_fuzzy"]
    {
        let (runner, out) = replay_run(name);
        for r in &out.manifest.records {
            let p = runner.rerender(r).unwrap().unwrap();
            assert_eq!(Some(p.fingerprint()), r.prompt_hash, "{name} {}", r.id);
            assert_eq!(Some(p.total_len()), r.prompt_bytes);
        }
    }
}

#[test]
fn manifest_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let runner = Runner::new(demo::config("final")).unwrap();
    let out = runner.run(&RunOptions { manifest_path: Some(path.clone()), resume: false }).unwrap();
    assert_eq!(RunManifest::load(&path).unwrap(), out.manifest);
}

#[test]
fn failed_run_resumes_without_repeating_finished_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("run.manifest.json");
    let opts = RunOptions { manifest_path: Some(manifest.clone()), resume: true };
    let single = |mut c: ExperimentConfig| {
        c.provider.as_mut().unwrap().max_in_flight = 1;
        c
    };

    let broken = MockServer::start(Duration::ZERO, |_, _, body| {
        let user = body["messages"][1]["content"].as_str().unwrap();
        if user.contains("God called the light") {
            (400, r#"{"error":"bad request"}"#.into())
        } else {
            (200, chat_reply(&demo::echo_source(body)))
        }
    });
    let cfg = single(demo::over_http("postedit_0shot", &broken.base_url, &dir.path().join("c1")));
    let err = Runner::new(cfg).unwrap().run(&opts).unwrap_err();
    match err {
        PipelineError::Aborted { id, incomplete, .. } => {
            assert_eq!(id, "GEN.1.5");
            assert_eq!(incomplete, 6);
        }
        e => panic!("{e}"),
    }
    let saved = RunManifest::load(&manifest).unwrap();
    let status: Vec<&str> = saved
        .records
        .iter()
        .map(|r| match r.status {
            RecordStatus::Ok => "ok",
            RecordStatus::Failed { .. } => "failed",
            RecordStatus::Pending => "pending",
        })
        .collect();
    assert_eq!(status, ["ok", "ok", "ok", "ok", "failed", "pending", "pending", "pending", "pending", "pending"]);

    // a fresh cache proves the finished sentences come from the manifest
    let fixed = MockServer::start(Duration::ZERO, |_, _, body| (200, chat_reply(&demo::echo_source(body))));
    let cfg = single(demo::over_http("postedit_0shot", &fixed.base_url, &dir.path().join("c2")));
    let resumed = Runner::new(cfg.clone()).unwrap().run(&opts).unwrap();
    assert_eq!(fixed.requests().len(), 6);

    let fresh = Runner::new(demo::over_http("postedit_0shot", &fixed.base_url, &dir.path().join("c3")))
        .unwrap()
        .run(&RunOptions::default())
        .unwrap();
    assert_eq!(serde_json::to_value(&resumed.report).unwrap(), serde_json::to_value(&fresh.report).unwrap());

    let mut other = cfg;
    other.context = postedit::pipeline::ContextMode::Bm25;
    other.k = 3;
    assert!(matches!(Runner::new(other).unwrap().run(&opts), Err(PipelineError::Config(_))));
}

#[test]
fn sweep_reuses_cached_completions() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockServer::start(Duration::ZERO, |_, _, body| (200, chat_reply(&demo::echo_source(body))));
    let cfg = demo::over_http("postedit_fuzzy_word", &server.base_url, &dir.path().join("cache"));
    let out_dir = dir.path().join("sweep");
    let opts = SweepOptions { out_dir: Some(out_dir.clone()), ..Default::default() };

    let first = sweep(&cfg, &[1, 2], &opts).unwrap();
    assert!(first.rows.iter().all(|r| r.status == "ok"));
    let keys = |n: usize| -> BTreeSet<String> {
        let m = RunManifest::load(&out_dir.join(format!("postedit_fuzzy_word@{n}.manifest.json"))).unwrap();
        m.records.into_iter().filter_map(|r| r.cache_key).collect()
    };
    let seen: BTreeSet<String> = keys(1).union(&keys(2)).cloned().collect();
    assert_eq!(server.requests().len(), seen.len());

    let second = sweep(&cfg, &[1, 2, 3], &opts).unwrap();
    let fresh = keys(3).difference(&seen).count();
    assert_eq!(server.requests().len(), seen.len() + fresh);
    assert_eq!(second.rows[..2], first.rows[..]);
    assert_eq!(second.rows.iter().map(|r| r.k_or_n).collect::<Vec<_>>(), [1, 2, 3]);
}

#[test]
fn sweep_keeps_going_after_a_failed_cell() {
    let dir = tempfile::tempdir().unwrap();
    let poisoned = Arc::new(AtomicBool::new(false));
    let flag = poisoned.clone();
    let server = MockServer::start(Duration::ZERO, move |_, _, body| {
        if flag.load(Ordering::SeqCst) {
            (400, "{}".into())
        } else {
            (200, chat_reply(&demo::echo_source(body)))
        }
    });
    let cfg = demo::over_http("postedit_bm25", &server.base_url, &dir.path().join("cache"));
    sweep(&cfg, &[1], &SweepOptions::default()).unwrap();
    poisoned.store(true, Ordering::SeqCst);
    let result = sweep(&cfg, &[1, 4], &SweepOptions::default()).unwrap();
    assert_eq!(result.rows[0].status, "ok");
    assert!(result.rows[1].status.starts_with("failed"));
    assert_eq!(result.rows[1].chrf, None);
    assert_eq!(result.reports.len(), 1);
}

#[test]
fn sweep_csv_round_trips() {
    let cfg = demo::config("postedit_fuzzy_word");
    let result = sweep(&cfg, &[1, 3], &SweepOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &result).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("strategy,k_or_n,effective_k_mean,BLEU,chrF++,status\n"), "{text}");
    let (label, rows) = read_sweep_csv(&buf[..]).unwrap();
    assert_eq!(label, "BLEU");
    assert_eq!(rows, result.rows);
}

fn with_scores(template: &EvalReport, label: &str, bleu: f64, chrf: f64) -> EvalReport {
    EvalReport { label: label.into(), corpus_bleu: bleu, corpus_chrf: chrf, ..template.clone() }
}

#[test]
fn compare_reports_rounded_deltas() {
    let (_, out) = replay_run("nmt_only");
    let t = &out.report;
    let reports = vec![
        with_scores(t, "base", 10.004, 30.0),
        with_scores(t, "better", 12.006, 31.5),
        with_scores(t, "worse", 9.0, 29.994),
    ];
    let table = compare(&reports, "base").unwrap();
    let labels: Vec<&str> = table.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["better", "base", "worse"]);
    let better = table.row("better").unwrap();
    assert_eq!((better.bleu_delta, better.chrf_delta), (201, 150));
    assert_eq!(format_delta(better.bleu_delta), "(+2.01)");
    let worse = table.row("worse").unwrap();
    assert_eq!(format_delta(worse.bleu_delta), "(-1.00)");
    assert!(table.row("base").unwrap().is_baseline);

    assert!(matches!(compare(&reports, "missing"), Err(PipelineError::Compare(_))));
    assert!(matches!(compare(&reports[..1], "base"), Err(PipelineError::Compare(_))));
    let mut other_set = reports.clone();
    other_set[2].test_set_fingerprint = "different".into();
    assert!(matches!(compare(&other_set, "base"), Err(PipelineError::Compare(_))));
    let mut other_metric = reports;
    other_metric[1].bleu_label = "spBLEU".into();
    assert!(matches!(compare(&other_metric, "base"), Err(PipelineError::Compare(_))));
}
