//! HTTP client for a model server exposing the pronoun-classification API.
//!
//! Wire format (JSON):
//!
//! ```text
//! GET  /health  -> {"status": "ok", "models": [...]}
//! POST /batch   {"model": id, "items": [{"vector": [0,1,...]}, ...]}
//!               -> {"model": id, "responses": [{"label": 0|1,
//!                      "scores": {"she": p, "he": p}, "model": id}, ...]}
//! ```
//!
//! Responses arrive in request order. Labels are cached per example for the
//! lifetime of the client.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{TabularExample, Value};

pub const ENV_URL: &str = "ORACLE_URL";
pub const ENV_TIMEOUT: &str = "ORACLE_TIMEOUT_SECS";
pub const ENV_BATCH: &str = "ORACLE_BATCH";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
    pub batch_size: usize,
    /// Number of batches in flight at once.
    pub parallelism: usize,
    /// Extra attempts after a retryable failure.
    pub retries: u32,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            model: model.into(),
            timeout: Duration::from_secs(60),
            batch_size: 32,
            parallelism: 1,
            retries: 2,
        }
    }

    /// Fills endpoint, timeout and batch size from `ORACLE_URL`,
    /// `ORACLE_TIMEOUT_SECS` and `ORACLE_BATCH` where set.
    pub fn from_env(model: impl Into<String>) -> Result<Self> {
        let endpoint = std::env::var(ENV_URL)
            .map_err(|_| Error::config(format!("{ENV_URL} is not set")))?;
        let mut config = RemoteConfig::new(endpoint, model);
        config.apply_env()?;
        Ok(config)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(ENV_TIMEOUT) {
            let secs: f64 = v
                .parse()
                .map_err(|_| Error::config(format!("{ENV_TIMEOUT}={v:?} is not a number")))?;
            self.timeout = Duration::from_secs_f64(secs);
        }
        if let Ok(v) = std::env::var(ENV_BATCH) {
            self.batch_size = v
                .parse()
                .map_err(|_| Error::config(format!("{ENV_BATCH}={v:?} is not a count")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct BatchItem {
    vector: Vec<i64>,
}

#[derive(Debug, Serialize)]
struct BatchRequest<'a> {
    model: &'a str,
    items: Vec<BatchItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronounScores {
    pub she: f64,
    pub he: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub label: u8,
    #[serde(default)]
    pub scores: Option<PronounScores>,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Deserialize)]
struct BatchResponse {
    responses: Vec<ClassifyResponse>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Health {
    pub status: String,
    #[serde(default)]
    pub models: Vec<String>,
}

pub struct RemoteOracle {
    config: RemoteConfig,
    agent: ureq::Agent,
    cache: Mutex<HashMap<TabularExample, u8>>,
    requests: AtomicU64,
}

impl std::fmt::Debug for RemoteOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteOracle")
            .field("config", &self.config)
            .field("requests", &self.requests.load(Ordering::Relaxed))
            .finish()
    }
}

fn transport(message: impl Into<String>, retryable: bool) -> Error {
    Error::Transport {
        message: message.into(),
        retryable,
    }
}

fn map_ureq(err: ureq::Error) -> Error {
    match err {
        ureq::Error::Status(code, response) => {
            let body = response.into_string().unwrap_or_default();
            transport(format!("server answered {code}: {}", body.trim()), code >= 500)
        }
        ureq::Error::Transport(t) => transport(t.to_string(), true),
    }
}

impl RemoteOracle {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if config.parallelism == 0 {
            return Err(Error::config("parallelism must be at least 1"));
        }
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Ok(RemoteOracle {
            config,
            agent,
            cache: Mutex::new(HashMap::new()),
            requests: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// HTTP requests actually sent (cache hits excluded).
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn health(&self) -> Result<Health> {
        let url = format!("{}/health", self.config.endpoint);
        let resp = self.agent.get(&url).call().map_err(map_ureq)?;
        resp.into_json()
            .map_err(|e| transport(format!("bad health response: {e}"), false))
    }

    fn encode(example: &TabularExample) -> Result<BatchItem> {
        let vector = example
            .values()
            .iter()
            .map(|v| match v {
                Value::Int(i) => Ok(*i),
                other => Err(Error::Unsupported(format!(
                    "remote oracle needs integer vectors, got {other}"
                ))),
            })
            .collect::<Result<_>>()?;
        Ok(BatchItem { vector })
    }

    fn post_batch(&self, examples: &[TabularExample]) -> Result<Vec<u8>> {
        let body = BatchRequest {
            model: &self.config.model,
            items: examples.iter().map(Self::encode).collect::<Result<_>>()?,
        };
        let url = format!("{}/batch", self.config.endpoint);
        let mut attempt = 0;
        loop {
            self.requests.fetch_add(1, Ordering::Relaxed);
            let outcome = self
                .agent
                .post(&url)
                .send_json(&body)
                .map_err(map_ureq)
                .and_then(|resp| {
                    resp.into_json::<BatchResponse>()
                        .map_err(|e| transport(format!("bad batch response: {e}"), false))
                });
            match outcome {
                Ok(batch) => return Self::labels_from(batch, examples.len()),
                Err(Error::Transport { retryable: true, .. }) if attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn labels_from(batch: BatchResponse, expected: usize) -> Result<Vec<u8>> {
        if batch.responses.len() != expected {
            return Err(transport(
                format!("sent {expected} items, received {} responses", batch.responses.len()),
                false,
            ));
        }
        batch
            .responses
            .into_iter()
            .map(|r| match r.label {
                0 | 1 => Ok(r.label),
                other => Err(transport(format!("label {other} is not 0 or 1"), false)),
            })
            .collect()
    }

    /// Labels for `examples`, in order. Uncached examples are deduplicated,
    /// split into batches and sent with up to `parallelism` batches in flight.
    pub fn classify(&self, examples: &[TabularExample]) -> Result<Vec<u8>> {
        let missing: Vec<TabularExample> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut seen = std::collections::HashSet::new();
            examples
                .iter()
                .filter(|e| !cache.contains_key(*e) && seen.insert(*e))
                .cloned()
                .collect()
        };

        let chunks: Vec<&[TabularExample]> = missing.chunks(self.config.batch_size).collect();
        for wave in chunks.chunks(self.config.parallelism) {
            let results: Vec<Result<Vec<u8>>> = if wave.len() == 1 {
                vec![self.post_batch(wave[0])]
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|chunk| scope.spawn(move || self.post_batch(chunk)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().unwrap_or_else(|_| Err(transport("worker panicked", false))))
                        .collect()
                })
            };
            let mut cache = self.cache.lock().expect("cache lock");
            for (chunk, labels) in wave.iter().zip(results) {
                for (example, label) in chunk.iter().zip(labels?) {
                    cache.insert(example.clone(), label);
                }
            }
        }

        let cache = self.cache.lock().expect("cache lock");
        Ok(examples.iter().map(|e| cache[e]).collect())
    }
}
