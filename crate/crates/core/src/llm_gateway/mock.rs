//! A local chat-completion server for tests and offline runs.
//!
//! The server answers `POST .../chat/completions` by calling a handler with the decoded
//! request body. It records every request, the `Authorization` header, and the peak number
//! of requests being handled at once.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockReply {
    /// HTTP 200 with a well-formed completion whose message content is this text.
    Content(String),
    /// The given status with this plain-text body.
    Status(u16, String),
    /// The given status with this exact body.
    Raw(u16, String),
}

#[derive(Debug, Clone)]
pub struct MockRequest {
    pub body: Value,
    /// 0-based arrival order.
    pub index: usize,
}

impl MockRequest {
    pub fn message(&self, role: &str) -> &str {
        self.body["messages"]
            .as_array()
            .and_then(|m| m.iter().find(|x| x["role"] == role))
            .and_then(|x| x["content"].as_str())
            .unwrap_or("")
    }

    pub fn system(&self) -> &str {
        self.message("system")
    }

    pub fn user(&self) -> &str {
        self.message("user")
    }
}

type Handler = dyn Fn(&MockRequest) -> MockReply + Send + Sync;

#[derive(Default)]
struct State {
    requests: Mutex<Vec<Value>>,
    auth: Mutex<Vec<Option<String>>>,
    count: AtomicUsize,
    active: AtomicUsize,
    peak: AtomicUsize,
    delay_ms: AtomicUsize,
}

pub struct MockServer {
    url: String,
    server: Arc<tiny_http::Server>,
    state: Arc<State>,
    workers: Vec<JoinHandle<()>>,
}

const WORKERS: usize = 24;

impl MockServer {
    pub fn start(handler: impl Fn(&MockRequest) -> MockReply + Send + Sync + 'static) -> MockServer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let state = Arc::new(State::default());
        let handler: Arc<Handler> = Arc::new(handler);
        let workers = (0..WORKERS)
            .map(|_| {
                let server = Arc::clone(&server);
                let state = Arc::clone(&state);
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    while let Ok(req) = server.recv() {
                        serve(req, &state, handler.as_ref());
                    }
                })
            })
            .collect();
        MockServer { url: format!("http://127.0.0.1:{port}/v1"), server, state, workers }
    }

    /// Replies from `script` in arrival order; the last reply repeats once the script runs out.
    pub fn scripted(script: Vec<MockReply>) -> MockServer {
        assert!(!script.is_empty(), "script needs at least one reply");
        MockServer::start(move |r| script[r.index.min(script.len() - 1)].clone())
    }

    /// Holds every request for `delay` before answering.
    pub fn with_delay(self, delay: Duration) -> MockServer {
        self.state.delay_ms.store(delay.as_millis() as usize, Ordering::SeqCst);
        self
    }

    /// Base URL to use as the endpoint (`http://127.0.0.1:<port>/v1`).
    pub fn url(&self) -> String {
        self.url.clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.count.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<Value> {
        self.state.requests.lock().unwrap().clone()
    }

    pub fn authorizations(&self) -> Vec<Option<String>> {
        self.state.auth.lock().unwrap().clone()
    }

    pub fn max_in_flight(&self) -> usize {
        self.state.peak.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn serve(mut req: tiny_http::Request, state: &State, handler: &Handler) {
    let active = state.active.fetch_add(1, Ordering::SeqCst) + 1;
    state.peak.fetch_max(active, Ordering::SeqCst);

    let mut raw = String::new();
    let _ = req.as_reader().read_to_string(&mut raw);
    let auth = req
        .headers()
        .iter()
        .find(|h| h.field.equiv("Authorization"))
        .map(|h| h.value.as_str().to_string());
    let body: Value = serde_json::from_str(&raw).unwrap_or(Value::Null);

    let reply = if !req.url().ends_with("/chat/completions") {
        MockReply::Status(404, "not found".into())
    } else {
        let index = {
            let mut reqs = state.requests.lock().unwrap();
            state.auth.lock().unwrap().push(auth);
            reqs.push(body.clone());
            state.count.fetch_add(1, Ordering::SeqCst);
            reqs.len() - 1
        };
        let delay = state.delay_ms.load(Ordering::SeqCst);
        if delay > 0 {
            std::thread::sleep(Duration::from_millis(delay as u64));
        }
        handler(&MockRequest { body, index })
    };

    let (status, text) = match reply {
        MockReply::Content(content) => (
            200,
            json!({
                "id": "mock",
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
            })
            .to_string(),
        ),
        MockReply::Status(code, text) | MockReply::Raw(code, text) => (code, text),
    };
    state.active.fetch_sub(1, Ordering::SeqCst);
    let response = tiny_http::Response::from_string(text).with_status_code(status);
    let _ = req.respond(response);
}
