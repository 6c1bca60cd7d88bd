//! Chat-completion transport.
//!
//! Requests go out as `{model, messages, temperature, max_tokens}` and the answer is read
//! from `choices[0].message.content`. Transport errors, HTTP 429 and 5xx are retried with
//! exponential backoff up to `max_attempts` total attempts; other 4xx statuses fail at once.
//! A client-wide semaphore caps the number of requests in flight, and successful answers
//! are cached on disk keyed by the SHA-256 of the request body.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ChatRequest, GatewayError};

pub const API_KEY_ENV: &str = "FRAMESCOPE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Either the API root (`https://host/v1`) or the full `.../chat/completions` URL.
    pub base_url: String,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_max_backoff")]
    pub max_backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_attempts() -> u32 {
    4
}
fn default_backoff() -> u64 {
    500
}
fn default_max_backoff() -> u64 {
    30_000
}
fn default_timeout() -> u64 {
    120
}
fn default_in_flight() -> usize {
    4
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> EndpointConfig {
        EndpointConfig {
            base_url: base_url.into(),
            max_attempts: default_attempts(),
            initial_backoff_ms: default_backoff(),
            max_backoff_ms: default_max_backoff(),
            timeout_secs: default_timeout(),
            max_in_flight: default_in_flight(),
            api_key: None,
        }
    }

    /// Reads the credential from `FRAMESCOPE_API_KEY`.
    pub fn with_env_key(mut self) -> EndpointConfig {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        self
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub content: String,
    /// HTTP attempts made; 0 for a cache hit.
    pub attempts: u32,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum CompletionError {
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("endpoint rejected the request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unreadable completion response: {0}")]
    Malformed(String),
}

impl CompletionError {
    pub fn attempts(&self) -> u32 {
        match self {
            CompletionError::Exhausted { attempts, .. } => *attempts,
            _ => 1,
        }
    }
}

enum SendError {
    Retryable(String),
    Fatal(CompletionError),
}

struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.count.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// On-disk response cache: `<dir>/<sha256>.json` holding the request body and the answer.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    request: Value,
    response: String,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<ResponseCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str::<CacheEntry>(&text).ok().map(|e| e.response)
    }

    pub fn put(&self, key: &str, request: &Value, response: &str) -> std::io::Result<()> {
        let entry = CacheEntry { request: request.clone(), response: response.to_string() };
        let tmp = self.dir.join(format!("{key}.{:?}.tmp", std::thread::current().id()));
        fs::write(&tmp, serde_json::to_vec_pretty(&entry)?)?;
        fs::rename(tmp, self.path(key))
    }
}

/// Wire body for a chat request.
pub fn wire_body(req: &ChatRequest) -> Value {
    json!({
        "model": req.model,
        "messages": [
            {"role": "system", "content": req.system_text},
            {"role": "user", "content": req.user_text},
        ],
        "temperature": req.temperature,
        "max_tokens": req.max_output_tokens,
    })
}

/// Cache key: hex SHA-256 of the serialized wire body (covers prompt and model).
pub fn cache_key(body: &Value) -> String {
    hex::encode(Sha256::digest(body.to_string().as_bytes()))
}

pub struct LlmClient {
    config: EndpointConfig,
    agent: ureq::Agent,
    in_flight: InFlight,
    cache: Option<ResponseCache>,
}

impl LlmClient {
    pub fn new(config: EndpointConfig, cache: Option<ResponseCache>) -> Result<LlmClient, GatewayError> {
        url::Url::parse(&config.completions_url())
            .map_err(|e| GatewayError::Config(format!("invalid endpoint url {:?}: {e}", config.base_url)))?;
        if config.max_in_flight == 0 {
            return Err(GatewayError::Config("max_in_flight must be at least 1".into()));
        }
        if config.max_attempts == 0 {
            return Err(GatewayError::Config("max_attempts must be at least 1".into()));
        }
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
        let in_flight = InFlight { count: Mutex::new(0), freed: Condvar::new(), max: config.max_in_flight };
        Ok(LlmClient { config, agent, in_flight, cache })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<Completion, CompletionError> {
        req.validate().map_err(|e| CompletionError::Malformed(e.to_string()))?;
        let body = wire_body(req);
        let key = cache_key(&body);
        if let Some(content) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(Completion { content, attempts: 0, cached: true });
        }
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.send(&body)
            };
            match outcome {
                Ok(content) => {
                    if let Some(cache) = &self.cache {
                        if let Err(e) = cache.put(&key, &body, &content) {
                            log::warn!("cannot write response cache entry {key}: {e}");
                        }
                    }
                    return Ok(Completion { content, attempts: attempt, cached: false });
                }
                Err(SendError::Fatal(e)) => return Err(e),
                Err(SendError::Retryable(last)) => {
                    if attempt >= self.config.max_attempts {
                        return Err(CompletionError::Exhausted { attempts: attempt, last });
                    }
                    log::debug!("attempt {attempt} failed ({last}); backing off");
                    std::thread::sleep(self.config.backoff(attempt));
                }
            }
        }
    }

    fn send(&self, body: &Value) -> Result<String, SendError> {
        let mut call = self.agent.post(&self.config.completions_url()).set("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        match call.send_json(body) {
            Ok(resp) => {
                let text = resp.into_string().map_err(|e| SendError::Retryable(format!("reading body: {e}")))?;
                extract_content(&text).map_err(|e| SendError::Fatal(CompletionError::Malformed(e)))
            }
            Err(ureq::Error::Status(status, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                if status == 429 || status >= 500 {
                    Err(SendError::Retryable(format!("HTTP {status}")))
                } else {
                    Err(SendError::Fatal(CompletionError::Rejected { status, body: text }))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(SendError::Retryable(t.to_string())),
        }
    }
}

/// `choices[0].message.content` from a completion response body.
pub fn extract_content(body: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())
}
