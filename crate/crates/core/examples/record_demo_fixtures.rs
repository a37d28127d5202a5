//! Regenerates `data/demo/fixtures` by running every demo config against a
//! deterministic stand-in for the LLM and embedding endpoints.
//!
//! The stand-in learns word translations from the glossary lines and from
//! words seen at the same position in at least two example pairs. Direct
//! translation maps known words and leaves the rest in English; post-editing
//! first collapses repetition loops in the draft, then replaces draft words
//! it can translate. More context therefore helps, as with a real model.
//!
//! ```text
//! cargo run --example record_demo_fixtures
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use postedit::pipeline::{sweep, ContextMode, ExperimentConfig, Mode, RunOptions, Runner, SweepOptions};
use postedit::prompt::{parse_user, LanguageProfile};
use postedit::provider::{HttpReply, Provider, ProviderKind, Transport, TransportError};
use serde_json::{json, Value};

const PUNCT: &[char] = &['!', '"', '\'', '(', ')', ',', '.', ':', ';', '?', '“', '”', '‘', '’'];

fn split_token(tok: &str) -> (&str, &str, &str) {
    let core_start = tok.len() - tok.trim_start_matches(PUNCT).len();
    let rest = &tok[core_start..];
    let core = rest.trim_end_matches(PUNCT);
    (&tok[..core_start], core, &rest[core.len()..])
}

fn core_key(tok: &str) -> String {
    split_token(tok).1.to_lowercase()
}

struct FakeLlm {
    profile: LanguageProfile,
}

impl FakeLlm {
    fn dictionary(&self, user: &str) -> HashMap<String, String> {
        let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
        let ex_prefix = format!("{}: ", self.profile.name);
        let en_prefix = format!("{} translation: ", self.profile.source_name);
        let lines: Vec<&str> = user.lines().collect();
        for w in lines.windows(2) {
            if let (Some(t), Some(s)) = (w[0].strip_prefix(&ex_prefix), w[1].strip_prefix(&en_prefix)) {
                let (ts, ss): (Vec<&str>, Vec<&str>) = (t.split_whitespace().collect(), s.split_whitespace().collect());
                if ts.len() == ss.len() {
                    for (a, b) in ss.iter().zip(&ts) {
                        *seen.entry((core_key(a), core_key(b))).or_default() += 1;
                    }
                }
            }
        }
        // a word needs two agreeing examples before it is trusted
        let mut dict: HashMap<String, String> = seen.into_iter().filter(|(_, c)| *c >= 2).map(|(k, _)| k).collect();
        for line in &lines {
            if let Some(item) = line.strip_prefix("- ") {
                if let Some((lhs, target)) = item.split_once(" -> ") {
                    let word = lhs.split(" (").next().unwrap_or(lhs);
                    dict.insert(word.to_lowercase(), target.to_lowercase());
                }
            }
        }
        dict
    }

    fn translate(dict: &HashMap<String, String>, src: &str) -> Option<String> {
        let (pre, core, post) = split_token(src);
        let t = dict.get(&core.to_lowercase())?;
        let mut t = t.clone();
        if core.starts_with(char::is_uppercase) {
            let mut c = t.chars();
            t = c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default();
        }
        Some(format!("{pre}{t}{post}"))
    }

    /// Drops trailing repeats of a short word cycle, keeping one copy.
    fn collapse_loops(tokens: &mut Vec<String>) {
        'outer: loop {
            for len in 1..=6 {
                let n = tokens.len();
                if n < len * 3 {
                    continue;
                }
                let tail = &tokens[n - len..];
                let mut reps = 1;
                while n >= len * (reps + 1) && tokens[n - len * (reps + 1)..n - len * reps] == *tail {
                    reps += 1;
                }
                if reps >= 3 {
                    tokens.truncate(n - len * (reps - 1));
                    continue 'outer;
                }
            }
            break;
        }
    }

    fn reply(&self, system: &str, user: &str) -> String {
        let parsed = parse_user(user, &self.profile).expect("demo prompts parse");
        let dict = self.dictionary(user);
        let src: Vec<&str> = parsed.source.split_whitespace().collect();
        let out: Vec<String> = match parsed.draft {
            None => src.iter().map(|s| Self::translate(&dict, s).unwrap_or_else(|| s.to_string())).collect(),
            Some(draft) => {
                assert!(system.contains("correct and verify"));
                let mut d: Vec<String> = draft.split_whitespace().map(str::to_string).collect();
                Self::collapse_loops(&mut d);
                if d.len() == src.len() {
                    src.iter().zip(&d).map(|(s, dt)| Self::translate(&dict, s).unwrap_or_else(|| dt.clone())).collect()
                } else {
                    d
                }
            }
        };
        out.join(" ")
    }
}

/// 64-dimensional hashed character trigram counts.
fn fake_embedding(text: &str) -> Vec<f64> {
    let padded: Vec<char> = format!("  {}  ", text.to_lowercase()).chars().collect();
    let mut v = vec![0.0; 64];
    for w in padded.windows(3) {
        let h = w.iter().fold(2166136261u32, |h, c| (h ^ *c as u32).wrapping_mul(16777619));
        v[(h % 64) as usize] += 1.0;
    }
    v
}

impl Transport for FakeLlm {
    fn post_json(
        &self,
        url: &str,
        _key: Option<&str>,
        body: &Value,
        _t: Duration,
    ) -> Result<HttpReply, TransportError> {
        let reply = if url.ends_with("/embeddings") {
            let data: Vec<Value> = body["input"]
                .as_array()
                .unwrap()
                .iter()
                .enumerate()
                .map(|(i, t)| json!({"index": i, "embedding": fake_embedding(t.as_str().unwrap())}))
                .collect();
            json!({"data": data})
        } else {
            let text = self.reply(
                body["messages"][0]["content"].as_str().unwrap(),
                body["messages"][1]["content"].as_str().unwrap(),
            );
            json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
        };
        Ok(HttpReply { status: 200, body: reply.to_string() })
    }
}

pub const FUZZY_SWEEP: [usize; 5] = [1, 2, 3, 5, 10];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let fixtures = demo.join("fixtures");
    if fixtures.exists() {
        std::fs::remove_dir_all(&fixtures)?;
    }
    let mut configs: Vec<PathBuf> =
        std::fs::read_dir(demo.join("configs"))?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    configs.sort();

    let live_provider = |cfg: &ExperimentConfig| -> Result<Arc<Provider>, Box<dyn std::error::Error>> {
        let mut pc = cfg.provider.clone().expect("LLM configs have a provider");
        pc.kind = ProviderKind::Http;
        pc.base_url = "http://fake.invalid/v1".into();
        pc.cache_dir = Some(fixtures.clone());
        let fake = FakeLlm { profile: cfg.language.clone() };
        Ok(Arc::new(Provider::with_transport(pc, Arc::new(fake))?))
    };

    for path in &configs {
        let cfg = ExperimentConfig::load(path)?;
        let name = path.file_stem().unwrap().to_string_lossy();
        if cfg.mode == Mode::NmtOnly {
            continue;
        }
        let provider = live_provider(&cfg)?;
        if cfg.context == ContextMode::FuzzyWord && name != "final" {
            let result =
                sweep(&cfg, &FUZZY_SWEEP, &SweepOptions { provider: Some(provider.clone()), ..Default::default() })?;
            for r in &result.rows {
                println!("{name} n={:<3} chrF++ {:6.2}  {}", r.k_or_n, r.chrf.unwrap_or(f64::NAN), r.status);
            }
        } else {
            let out = Runner::new(cfg)?.with_provider(provider.clone()).run(&RunOptions::default())?;
            println!("{name:<24} BLEU {:6.2}  chrF++ {:6.2}", out.report.corpus_bleu, out.report.corpus_chrf);
        }
    }
    let count = std::fs::read_dir(&fixtures)?.count();
    println!("{count} fixture files in {}", relative(&fixtures));
    Ok(())
}

fn relative(p: &Path) -> String {
    p.strip_prefix(env!("CARGO_MANIFEST_DIR")).unwrap_or(p).display().to_string()
}
