//! Post-correction of transliterated Arabic through a pluggable backend.
//!
//! A [`Backend`] turns a prompt into raw model text. [`correct_section`] adds
//! prompt construction, retry with exponential backoff and `<output>` tag
//! extraction; [`correct_sections`] fans requests out over a bounded pool of
//! threads and returns results in input order.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const TRANSLITERATION_PROMPT: &str = "You are a transliteration system that can transliterate Judeo-Arabic text to Arabic. Please transliterate the following Judeo-Arabic sentence to Arabic without providing any explanation. The output should be in Arabic script.";

const GEC_PROMPT: &str = "Please identify and correct any grammatical and spelling errors in the following sentence marked with the tag <input> SRC </input>. Make the minimal changes necessary to correct the sentence. Do not rephrase any parts of the sentence that are already grammatically correct, and avoid altering the meaning by adding or removing information. After making the corrections, output the revised sentence directly without providing any explanations. Remember to format the corrected output with the tag <output> Your Corrected Version </output>.";

const TRANSLATION_PROMPT: &str = "You are a machine translation system that can translate Arabic to English. Please translate the following Arabic sentence to English without providing any explanation.";

const OUTPUT_OPEN: &str = "<output>";
const OUTPUT_CLOSE: &str = "</output>";

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("correction input is empty")]
    EmptyText,
    #[error("no credential in environment variable {0}")]
    AuthMissing(String),
    #[error("request failed after {attempts} attempt(s): {message}")]
    TransportFailure { attempts: u32, message: String },
    #[error("no fixture entry for input hash {0}")]
    FixtureMiss(String),
    #[error("fixture {path}, line {line}: {message}")]
    FixtureParse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptTemplate {
    #[default]
    Gec,
    Transliteration,
    Translation,
}

impl PromptTemplate {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptTemplate::Gec => "gec",
            PromptTemplate::Transliteration => "transliteration",
            PromptTemplate::Translation => "translation",
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            PromptTemplate::Gec => GEC_PROMPT,
            PromptTemplate::Transliteration => TRANSLITERATION_PROMPT,
            PromptTemplate::Translation => TRANSLATION_PROMPT,
        }
    }
}

impl fmt::Display for PromptTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTemplate {
    type Err = CorrectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gec" => Ok(PromptTemplate::Gec),
            "transliteration" => Ok(PromptTemplate::Transliteration),
            "translation" => Ok(PromptTemplate::Translation),
            other => Err(CorrectionError::UnknownTemplate(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionRequest {
    pub text: String,
    pub template: PromptTemplate,
    pub model_id: String,
    pub max_retries: u32,
    pub timeout: Duration,
    /// Delay before the first retry; doubled for each further retry.
    pub backoff: Duration,
}

impl CorrectionRequest {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            template: PromptTemplate::Gec,
            model_id: String::new(),
            max_retries: 3,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionResponse {
    pub corrected: String,
    pub raw: String,
    pub extracted: bool,
}

pub fn build_prompt(req: &CorrectionRequest) -> Result<String, CorrectionError> {
    if req.text.trim().is_empty() {
        return Err(CorrectionError::EmptyText);
    }
    Ok(match req.template {
        PromptTemplate::Gec => GEC_PROMPT.replacen("SRC", &req.text, 1),
        t => format!("{}\n{}", t.text(), req.text),
    })
}

pub fn wrap_output(text: &str) -> String {
    format!("{OUTPUT_OPEN}{text}{OUTPUT_CLOSE}")
}

/// Content between the first `<output>` and the following `</output>`, or
/// `None` when either tag is missing.
pub fn extract_output(raw: &str) -> Option<&str> {
    let start = raw.find(OUTPUT_OPEN)? + OUTPUT_OPEN.len();
    let len = raw[start..].find(OUTPUT_CLOSE)?;
    Some(&raw[start..start + len])
}

pub fn response_from_raw(raw: String) -> CorrectionResponse {
    match extract_output(&raw) {
        Some(inner) => CorrectionResponse { corrected: inner.to_string(), raw, extracted: true },
        None => CorrectionResponse { corrected: raw.trim().to_string(), raw, extracted: false },
    }
}

/// Outcome of one backend call.
#[derive(Debug)]
pub enum AttemptError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx.
    Transient(String),
    Fatal(CorrectionError),
}

pub trait Backend: Sync {
    fn complete(&self, req: &CorrectionRequest, prompt: &str) -> Result<String, AttemptError>;
}

/// Echoes the input inside output tags, so the corrected text equals the
/// transliteration.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl Backend for IdentityBackend {
    fn complete(&self, req: &CorrectionRequest, _prompt: &str) -> Result<String, AttemptError> {
        Ok(wrap_output(&req.text))
    }
}

pub fn input_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Replays recorded outputs keyed by the SHA-256 of the request text. The
/// fixture file has two tab-separated columns, hash and raw output, with
/// `\n`, `\t` and `\\` escaped in the output.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    entries: HashMap<String, String>,
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\t', "\\t")
}

impl FixtureBackend {
    pub fn insert(&mut self, input: &str, output: impl Into<String>) {
        self.entries.insert(input_hash(input), output.into());
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CorrectionError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((hash, output)) = line.split_once('\t') else {
                return Err(CorrectionError::FixtureParse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected hash<TAB>output".into(),
                });
            };
            entries.insert(hash.to_ascii_lowercase(), unescape(output));
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorrectionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| CorrectionError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    /// Serializes entries sorted by hash.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<_> = self.entries.keys().collect();
        keys.sort();
        keys.into_iter().map(|k| format!("{k}\t{}\n", escape(&self.entries[k]))).collect()
    }
}

impl Backend for FixtureBackend {
    fn complete(&self, req: &CorrectionRequest, _prompt: &str) -> Result<String, AttemptError> {
        let hash = input_hash(&req.text);
        self.entries
            .get(&hash)
            .cloned()
            .ok_or(AttemptError::Fatal(CorrectionError::FixtureMiss(hash)))
    }
}

/// Chat-completion client: POSTs `{"model", "messages": [{"role": "user",
/// "content": prompt}]}` and reads `choices[0].message.content`.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    api_key: String,
    /// Passed through verbatim when set.
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
}

pub const DEFAULT_API_KEY_VAR: &str = "OPENAI_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), api_key: api_key.into(), temperature: None, top_p: None }
    }

    pub fn from_env(endpoint: impl Into<String>, key_var: &str) -> Result<Self, CorrectionError> {
        match std::env::var(key_var) {
            Ok(key) if !key.trim().is_empty() => Ok(Self::new(endpoint, key)),
            _ => Err(CorrectionError::AuthMissing(key_var.to_string())),
        }
    }

    fn body(&self, req: &CorrectionRequest, prompt: &str) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": req.model_id,
            "messages": [{ "role": "user", "content": prompt }],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = t.into();
        }
        if let Some(p) = self.top_p {
            body["top_p"] = p.into();
        }
        body
    }
}

impl Backend for HttpBackend {
    fn complete(&self, req: &CorrectionRequest, prompt: &str) -> Result<String, AttemptError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(req.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let result = agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.body(req, prompt));
        let mut response = match result {
            Ok(r) => r,
            Err(
                e @ (ureq::Error::Timeout(_)
                | ureq::Error::Io(_)
                | ureq::Error::ConnectionFailed
                | ureq::Error::HostNotFound
                | ureq::Error::BodyStalled),
            ) => return Err(AttemptError::Transient(e.to_string())),
            Err(e) => return Err(fatal(e.to_string())),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if status == 401 || status == 403 {
            return Err(fatal(format!("HTTP {status}: credential rejected")));
        }
        if !(200..300).contains(&status) {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(fatal(format!("HTTP {status}: {detail}")));
        }
        let json: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| AttemptError::Transient(format!("unreadable response: {e}")))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| fatal("response has no choices[0].message.content".into()))
    }
}

fn fatal(message: String) -> AttemptError {
    AttemptError::Fatal(CorrectionError::TransportFailure { attempts: 1, message })
}

/// Sends one request, retrying transient failures up to `max_retries` times.
pub fn correct_section(
    req: &CorrectionRequest,
    backend: &dyn Backend,
) -> Result<CorrectionResponse, CorrectionError> {
    let prompt = build_prompt(req)?;
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        match backend.complete(req, &prompt) {
            Ok(raw) => {
                let response = response_from_raw(raw);
                if !response.extracted {
                    log::warn!("response without output tags; using raw text");
                }
                return Ok(response);
            }
            Err(AttemptError::Fatal(CorrectionError::TransportFailure { message, .. })) => {
                return Err(CorrectionError::TransportFailure { attempts: attempt, message })
            }
            Err(AttemptError::Fatal(e)) => return Err(e),
            Err(AttemptError::Transient(message)) => {
                if attempt > req.max_retries {
                    return Err(CorrectionError::TransportFailure { attempts: attempt, message });
                }
                let delay = req.backoff.saturating_mul(1u32 << (attempt - 1).min(16));
                log::info!("attempt {attempt} failed ({message}); retrying in {delay:?}");
                std::thread::sleep(delay);
            }
        }
    }
}

/// Runs [`correct_section`] for every request on at most `concurrency`
/// threads. Results line up with `requests`.
pub fn correct_sections(
    requests: &[CorrectionRequest],
    backend: &dyn Backend,
    concurrency: usize,
) -> Vec<Result<CorrectionResponse, CorrectionError>> {
    let workers = concurrency.clamp(1, requests.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<CorrectionResponse, CorrectionError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(i) else { break };
                let result = correct_section(req, backend);
                slots.lock().expect("result lock poisoned")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock poisoned")
        .into_iter()
        .map(|r| r.expect("every request is processed"))
        .collect()
}
