use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Prediction, PriorProvider, PriorRecord, ProviderKind, DEFAULT_TOP_K};
use crate::error::{Error, Result};
use crate::vocab::normalize_relation;

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL of the scoring service, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub top_k: usize,
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further attempt.
    pub backoff: Duration,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            top_k: DEFAULT_TOP_K,
            max_retries: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(30),
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    subject: &'a str,
    object: &'a str,
    top_k: usize,
}

#[derive(Deserialize)]
struct ScoreResponse {
    predictions: Vec<Prediction>,
    #[serde(default)]
    #[allow(dead_code)]
    model_id: Option<String>,
}

enum Attempt {
    Transient(String),
    Fatal(String),
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cond: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cond.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cond.notify_one();
    }
}

/// Client for `POST {endpoint}/v1/predictions`.
pub struct RemotePrior {
    config: RemoteConfig,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemotePrior {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.top_k == 0 || config.max_in_flight == 0 {
            return Err(Error::invalid("remote prior needs positive top_k and max_in_flight"));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate { free: Mutex::new(config.max_in_flight), cond: Condvar::new() };
        Ok(Self { config, agent, gate })
    }

    fn url(&self) -> String {
        format!("{}/v1/predictions", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(&self, subject: &str, object: &str) -> std::result::Result<Vec<Prediction>, Attempt> {
        let request = ScoreRequest { subject, object, top_k: self.config.top_k };
        let mut response = match self.agent.post(&self.url()).send_json(&request) {
            Ok(r) => r,
            Err(
                e @ (ureq::Error::Io(_)
                | ureq::Error::Timeout(_)
                | ureq::Error::ConnectionFailed
                | ureq::Error::HostNotFound),
            ) => return Err(Attempt::Transient(e.to_string())),
            Err(e) => return Err(Attempt::Fatal(e.to_string())),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Transient(format!("service returned status {status}")));
        }
        if status != 200 {
            return Err(Attempt::Fatal(format!("service returned status {status}")));
        }
        let body: ScoreResponse =
            response.body_mut().read_json().map_err(|e| Attempt::Fatal(format!("schema violation: {e}")))?;
        Ok(body.predictions)
    }
}

impl PriorProvider for RemotePrior {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn top_k(&self) -> usize {
        self.config.top_k
    }

    fn query(&self, subject: &str, object: &str) -> Result<PriorRecord> {
        let _permit = self.gate.acquire();
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        let predictions = loop {
            match self.attempt(subject, object) {
                Ok(p) => break p,
                Err(Attempt::Fatal(msg)) => return Err(Error::Provider(msg)),
                Err(Attempt::Transient(msg)) if attempt >= self.config.max_retries => {
                    return Err(Error::Provider(format!("giving up after {} attempts: {msg}", attempt + 1)));
                }
                Err(Attempt::Transient(msg)) => {
                    warn!("prior request for ({subject}, {object}) failed: {msg}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        };
        if predictions.len() > self.config.top_k {
            return Err(Error::Provider(format!(
                "schema violation: {} predictions for top_k {}",
                predictions.len(),
                self.config.top_k
            )));
        }
        let record = PriorRecord {
            subject: normalize_relation(subject),
            object: normalize_relation(object),
            predictions: predictions
                .into_iter()
                .map(|p| Prediction { relation: normalize_relation(&p.relation), score: p.score })
                .collect(),
        };
        record.validate().map_err(|e| Error::Provider(format!("schema violation: {e}")))?;
        Ok(record)
    }
}
