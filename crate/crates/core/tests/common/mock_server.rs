//! Minimal HTTP/1.1 server for provider tests: one thread per connection,
//! scripted replies, and a record of every request.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::Value;

#[derive(Debug, Clone)]
pub struct Recorded {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

type Script = dyn Fn(usize, &str, &Value) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub base_url: String,
    requests: Arc<Mutex<Vec<Recorded>>>,
    peak: Arc<AtomicUsize>,
}

struct Shared {
    script: Box<Script>,
    delay: Duration,
    counter: AtomicUsize,
    live: AtomicUsize,
}

impl MockServer {
    /// `script(n, path, body)` answers the n-th request (0-based).
    pub fn start(
        delay: Duration,
        script: impl Fn(usize, &str, &Value) -> (u16, String) + Send + Sync + 'static,
    ) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let peak = Arc::new(AtomicUsize::new(0));
        let shared = Arc::new(Shared {
            script: Box::new(script),
            delay,
            counter: AtomicUsize::new(0),
            live: AtomicUsize::new(0),
        });
        let (req2, peak2) = (requests.clone(), peak.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (shared, req, peak) = (shared.clone(), req2.clone(), peak2.clone());
                std::thread::spawn(move || handle(stream, &shared, &req, &peak));
            }
        });
        Self { base_url, requests, peak }
    }

    pub fn requests(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }

    /// Most requests ever being served at once.
    pub fn high_water_mark(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

fn handle(stream: TcpStream, shared: &Shared, requests: &Mutex<Vec<Recorded>>, peak: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut length = 0;
    let mut authorization = None;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).unwrap();
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((name, value)) = h.split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => length = value.trim().parse().unwrap(),
                "authorization" => authorization = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);

    let now = shared.live.fetch_add(1, Ordering::SeqCst) + 1;
    peak.fetch_max(now, Ordering::SeqCst);
    let n = shared.counter.fetch_add(1, Ordering::SeqCst);
    requests.lock().unwrap().push(Recorded { path: path.clone(), authorization, body: body.clone() });
    std::thread::sleep(shared.delay);
    let (status, reply) = (shared.script)(n, &path, &body);
    shared.live.fetch_sub(1, Ordering::SeqCst);

    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
    let _ = out.flush();
}

pub fn chat_reply(text: &str) -> String {
    serde_json::json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 2},
    })
    .to_string()
}

/// Embedding reply with a 3-d vector derived from each input's length.
pub fn embedding_reply(body: &Value) -> String {
    let data: Vec<Value> = body["input"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let len = t.as_str().unwrap().len() as f64;
            serde_json::json!({"index": i, "embedding": [len, 1.0, (len * 0.5).sin()]})
        })
        .collect();
    serde_json::json!({"data": data}).to_string()
}
