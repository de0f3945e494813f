//! A chat-completions HTTP server that answers with the Jaccard heuristic
//! and injects faults.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use matchgpt::cost::count_tokens_approx;
use matchgpt::gateway::{cache_key, heuristic_oracle, ChatRequest};

pub const STUB_KEY: &str = "stub-key";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Answer every request, after injected failures for some prompts.
    Flaky,
    /// Fail every request with a 500.
    Down,
}

#[derive(Default)]
struct State {
    attempts: HashMap<String, usize>,
}

pub struct Stub {
    pub url: String,
    calls: Arc<AtomicUsize>,
    mode: Arc<Mutex<Mode>>,
}

impl Stub {
    pub fn start(mode: Mode) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let calls = Arc::new(AtomicUsize::new(0));
        let mode = Arc::new(Mutex::new(mode));
        let state = Arc::new(Mutex::new(State::default()));
        let (c, m) = (calls.clone(), mode.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (c, m, s) = (c.clone(), m.clone(), state.clone());
                thread::spawn(move || handle(stream, &c, &m, &s));
            }
        });
        Self { url, calls, mode }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn set_mode(&self, mode: Mode) {
        *self.mode.lock().unwrap() = mode;
    }
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        401 => "Unauthorized",
        429 => "Too Many Requests",
        _ => "Internal Server Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

fn handle(mut stream: TcpStream, calls: &AtomicUsize, mode: &Mutex<Mode>, state: &Mutex<State>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0usize;
    let mut auth = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = value.trim().parse().unwrap_or(0),
                "authorization" => auth = value.trim().to_string(),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    calls.fetch_add(1, Ordering::SeqCst);

    if *mode.lock().unwrap() == Mode::Down {
        return respond(&mut stream, 500, r#"{"error":"down"}"#);
    }
    if auth != format!("Bearer {STUB_KEY}") {
        return respond(&mut stream, 401, r#"{"error":"bad key"}"#);
    }
    let request: ChatRequest = serde_json::from_slice(&body).unwrap();
    let digest = cache_key(&request);
    let attempt = {
        let mut s = state.lock().unwrap();
        let n = s.attempts.entry(digest.clone()).or_default();
        *n += 1;
        *n
    };
    // a quarter of prompts fail twice before succeeding, one in sixteen
    // drops the connection once
    match (digest.as_bytes()[0], attempt) {
        (b'0'..=b'3', 1) => return respond(&mut stream, 500, r#"{"error":"overloaded"}"#),
        (b'0'..=b'3', 2) => return respond(&mut stream, 429, r#"{"error":"slow down"}"#),
        (b'f', 1) => return drop(stream),
        _ => {}
    }
    let content = heuristic_oracle(&request, 0.5).unwrap();
    let prompt_tokens: u64 = request.messages().messages().iter().map(|m| count_tokens_approx(&m.content) + 4).sum();
    let reply = serde_json::json!({
        "id": "stub",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": 2, "total_tokens": prompt_tokens + 2},
    });
    respond(&mut stream, 200, &reply.to_string());
}
