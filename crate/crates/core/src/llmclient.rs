//! Chat-completions client with retry and a resumable batch runner.
//!
//! Every request carries `temperature: 0.0`; callers cannot change it.
//! Completion-style prompts are sent as a single user message.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::{extract_correction, ChatMessage, ExtractionKind, Prompt};

pub const TEMPERATURE: f64 = 0.0;
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";
pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {status}): {body}")]
    AuthFailure { status: u16, body: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("journal {path}: {source}")]
    Journal { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key. Unset means no
    /// `Authorization` header is sent.
    pub api_key_env: String,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff_base: Duration,
    pub max_in_flight: usize,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: DEFAULT_API_KEY_ENV.to_owned(),
            timeout: Duration::from_secs(60),
            max_retries: 5,
            backoff_base: Duration::from_millis(500),
            max_in_flight: DEFAULT_IN_FLIGHT,
        }
    }

    pub fn url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

/// JSON request body. Temperature is fixed at zero.
pub fn encode_request(model: &str, messages: &[ChatMessage]) -> String {
    serde_json::to_string(&WireRequest {
        model,
        messages,
        temperature: TEMPERATURE,
    })
    .expect("plain struct")
}

/// Assistant text from a chat-completions response body.
pub fn decode_response(body: &str) -> Result<String, ClientError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ClientError::MalformedResponse("no choices".into()))?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(|t| t.as_str())
        .map(str::to_owned)
        .ok_or_else(|| ClientError::MalformedResponse("choice has no text content".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub retries: u32,
    pub latency_ms: u64,
}

pub struct Client {
    agent: ureq::Agent,
    config: EndpointConfig,
    api_key: Option<String>,
}

enum Attempt {
    Done(String),
    Transient(String),
    Fatal(ClientError),
}

impl Client {
    pub fn new(config: EndpointConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self { agent, config, api_key }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn attempt(&self, url: &str, body: &str) -> Attempt {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) if status == 200 => return Attempt::Transient(format!("reading body: {e}")),
            Err(_) => String::new(),
        };
        match status {
            200..=299 => match decode_response(&text) {
                Ok(t) => Attempt::Done(t),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(ClientError::AuthFailure { status, body: text }),
            408 | 429 | 500..=599 => Attempt::Transient(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(ClientError::Rejected { status, body: text }),
        }
    }

    /// Sends one request, retrying HTTP 408/429/5xx and transport failures
    /// with exponential backoff up to `max_retries` times.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, ClientError> {
        let url = self.config.url();
        let body = encode_request(&self.config.model, messages);
        let start = Instant::now();
        let mut retries = 0;
        loop {
            match self.attempt(&url, &body) {
                Attempt::Done(text) => {
                    return Ok(Completion {
                        text,
                        retries,
                        latency_ms: start.elapsed().as_millis() as u64,
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(msg) => {
                    if retries >= self.config.max_retries {
                        return Err(ClientError::Transport {
                            attempts: retries + 1,
                            message: msg,
                        });
                    }
                    let delay = self.config.backoff_base.saturating_mul(1 << retries.min(16));
                    log::debug!("transient failure ({msg}); retrying in {delay:?}");
                    thread::sleep(delay);
                    retries += 1;
                }
            }
        }
    }
}

/// Hex SHA-256 of the prompt's dump form.
pub fn prompt_fingerprint(prompt: &Prompt) -> String {
    hex::encode(Sha256::digest(prompt.render().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: usize,
    pub fingerprint: String,
    pub raw_output: Option<String>,
    pub correction: Option<String>,
    pub extraction: Option<ExtractionKind>,
    pub error: Option<String>,
    pub latency_ms: u64,
    pub retries: u32,
}

impl RunRecord {
    pub fn is_success(&self) -> bool {
        self.error.is_none() && self.correction.is_some()
    }
}

/// One query to run.
#[derive(Debug, Clone)]
pub struct Job {
    pub query_id: usize,
    pub prompt: Prompt,
    pub test_source: String,
}

/// Reads a journal; a missing file is empty. An unterminated final line
/// (interrupted write) is ignored.
pub fn read_journal(path: &Path) -> Result<Vec<RunRecord>, ClientError> {
    let jerr = |source| ClientError::Journal {
        path: path.to_owned(),
        source,
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(jerr(e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    complete
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| jerr(io::Error::new(io::ErrorKind::InvalidData, e))))
        .collect()
}

/// Latest record per query id.
pub fn latest_records(records: Vec<RunRecord>) -> HashMap<usize, RunRecord> {
    let mut out = HashMap::new();
    for r in records {
        out.insert(r.query_id, r);
    }
    out
}

/// Opens the journal for appending, dropping any torn final line.
fn open_journal(path: &Path) -> io::Result<File> {
    let mut f = OpenOptions::new().read(true).append(true).create(true).open(path)?;
    let mut text = Vec::new();
    f.read_to_end(&mut text)?;
    if text.last().is_some_and(|&b| b != b'\n') {
        let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        f.set_len(keep as u64)?;
    }
    Ok(f)
}

fn execute(client: &Client, job: &Job, fingerprint: String) -> RunRecord {
    match client.complete(&job.prompt.messages()) {
        Ok(c) => {
            let x = extract_correction(&c.text, &job.test_source);
            RunRecord {
                query_id: job.query_id,
                fingerprint,
                raw_output: Some(c.text),
                correction: Some(x.correction),
                extraction: Some(x.kind),
                error: None,
                latency_ms: c.latency_ms,
                retries: c.retries,
            }
        }
        Err(e) => RunRecord {
            query_id: job.query_id,
            fingerprint,
            raw_output: None,
            correction: None,
            extraction: None,
            error: Some(e.to_string()),
            latency_ms: 0,
            retries: 0,
        },
    }
}

/// Runs every job not already journaled successfully under the same prompt
/// fingerprint, appending each new record to the journal as it completes.
/// Returns one record per job, in job order. Failed requests are journaled
/// as error records and do not stop the batch.
pub fn run_batch(client: &Client, jobs: &[Job], journal: &Path) -> Result<Vec<RunRecord>, ClientError> {
    let jerr = |source| ClientError::Journal {
        path: journal.to_owned(),
        source,
    };
    let done = latest_records(read_journal(journal)?);
    let mut results: Vec<Option<RunRecord>> = vec![None; jobs.len()];
    let mut pending = Vec::new();
    for (i, job) in jobs.iter().enumerate() {
        let fp = prompt_fingerprint(&job.prompt);
        match done.get(&job.query_id) {
            Some(r) if r.is_success() && r.fingerprint == fp => results[i] = Some(r.clone()),
            _ => pending.push((i, fp)),
        }
    }
    if pending.is_empty() {
        return Ok(results.into_iter().map(|r| r.expect("filled")).collect());
    }
    log::info!("{} of {} queries to run", pending.len(), jobs.len());

    let file = Mutex::new(open_journal(journal).map_err(jerr)?);
    let slots = Mutex::new(results);
    let next = AtomicUsize::new(0);
    let write_error: Mutex<Option<io::Error>> = Mutex::new(None);
    let workers = client.config.max_in_flight.clamp(1, pending.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some((i, fp)) = pending.get(k) else { break };
                let rec = execute(client, &jobs[*i], fp.clone());
                let line = serde_json::to_string(&rec).expect("plain struct") + "\n";
                {
                    let mut f = file.lock().expect("journal lock");
                    if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
                        write_error.lock().expect("error lock").get_or_insert(e);
                    }
                }
                slots.lock().expect("slot lock")[*i] = Some(rec);
            });
        }
    });
    if let Some(e) = write_error.into_inner().expect("error lock") {
        return Err(jerr(e));
    }
    Ok(slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect())
}
