use std::path::{Path, PathBuf};

use postedit::pipeline::ExperimentConfig;
use postedit::provider::ProviderKind;

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo")
}

pub fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&dir().join("configs").join(format!("{name}.json"))).unwrap()
}

pub fn config_names() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir().join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

/// The demo config pointed at a live endpoint with its own cache.
pub fn over_http(name: &str, base_url: &str, cache: &Path) -> ExperimentConfig {
    let mut c = config(name);
    let p = c.provider.as_mut().expect("LLM config");
    p.kind = ProviderKind::Http;
    p.base_url = base_url.to_string();
    p.cache_dir = Some(cache.to_path_buf());
    p.retry_base_delay_ms = 1;
    p.max_retries = 1;
    c
}

/// Deterministic stand-in completion: the English source line, lowercased.
pub fn echo_source(body: &serde_json::Value) -> String {
    let user = body["messages"][1]["content"].as_str().unwrap_or_default();
    user.lines().find_map(|l| l.strip_prefix("Source text (English): ")).unwrap_or_default().to_lowercase()
}
