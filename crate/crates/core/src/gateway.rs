//! Chat-completion access for the language-model pipelines.
//!
//! Two backends sit behind [`Gateway`]: an OpenAI-compatible HTTP client and a
//! scripted stub that replays a fixture file, so every pipeline can run
//! offline and reproducibly. Every request/response pair is kept in an
//! in-memory log that the harness writes out as JSON lines.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const ENV_ENDPOINT: &str = "COMMONS_EGTA_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "COMMONS_EGTA_LLM_API_KEY";
pub const ENV_MODEL: &str = "COMMONS_EGTA_LLM_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<()> {
        if self.messages.is_empty() {
            return Err(Error::config("chat request needs at least one message"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::config("temperature must be >= 0"));
        }
        Ok(())
    }

    /// Messages rendered as `role: content` blocks.
    pub fn rendered(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
            };
            out.push_str(role);
            out.push_str(": ");
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the rendered prompt; stub fixtures key on this.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.rendered().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Http,
    #[default]
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub backend: Backend,
    /// Full chat-completions URL for the HTTP backend.
    pub endpoint: Option<String>,
    /// Never read from config files; only from the environment.
    #[serde(skip)]
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub fixture: Option<PathBuf>,
    pub in_flight_limit: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Stub,
            endpoint: None,
            api_key: None,
            model: "stub".into(),
            timeout_secs: 60.0,
            max_retries: 2,
            backoff_ms: 500,
            temperature: 0.0,
            max_tokens: 512,
            fixture: None,
            in_flight_limit: 4,
        }
    }
}

impl GatewayConfig {
    /// Applies endpoint, key and model overrides from the environment.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var(ENV_ENDPOINT) {
            if !v.is_empty() {
                self.endpoint = Some(v);
            }
        }
        if let Ok(v) = std::env::var(ENV_API_KEY) {
            if !v.is_empty() {
                self.api_key = Some(v);
            }
        }
        if let Ok(v) = std::env::var(ENV_MODEL) {
            if !v.is_empty() {
                self.model = v;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.backend == Backend::Http && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(Error::config(format!(
                "http gateway backend requires an endpoint (set gateway.endpoint or {ENV_ENDPOINT})"
            )));
        }
        if self.backend == Backend::Stub && self.fixture.is_none() {
            return Err(Error::config("stub gateway backend requires a fixture path"));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::config("gateway.timeout_secs must be > 0"));
        }
        if self.in_flight_limit == 0 {
            return Err(Error::config("gateway.in_flight_limit must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    pub response: String,
}

pub fn load_fixture(path: &Path) -> Result<Vec<FixtureEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<FixtureEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("fixture {}: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(Error::config(format!("fixture {} is empty", path.display())));
    }
    Ok(entries)
}

/// Replays fixture entries. Fingerprinted entries answer matching prompts in
/// order; everything else is served from the unkeyed entries, cycling.
#[derive(Debug)]
struct StubState {
    keyed: HashMap<String, Vec<String>>,
    keyed_cursor: HashMap<String, usize>,
    sequential: Vec<String>,
    cursor: usize,
}

impl StubState {
    fn new(entries: Vec<FixtureEntry>) -> Self {
        let mut keyed: HashMap<String, Vec<String>> = HashMap::new();
        let mut sequential = Vec::new();
        for e in &entries {
            match &e.fingerprint {
                Some(fp) => keyed.entry(fp.to_lowercase()).or_default().push(e.response.clone()),
                None => sequential.push(e.response.clone()),
            }
        }
        if sequential.is_empty() {
            sequential = entries.into_iter().map(|e| e.response).collect();
        }
        Self {
            keyed,
            keyed_cursor: HashMap::new(),
            sequential,
            cursor: 0,
        }
    }

    fn next(&mut self, fingerprint: &str) -> String {
        if let Some(list) = self.keyed.get(fingerprint) {
            let c = self.keyed_cursor.entry(fingerprint.to_string()).or_insert(0);
            let out = list[*c % list.len()].clone();
            *c += 1;
            return out;
        }
        let out = self.sequential[self.cursor % self.sequential.len()].clone();
        self.cursor += 1;
        out
    }
}

enum Transport {
    Http(ureq::Agent),
    Stub(Mutex<StubState>),
}

/// Who asked, for the request log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RequestTags {
    pub year: u32,
    pub household: Option<usize>,
    pub pipeline: String,
    pub purpose: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    #[serde(flatten)]
    pub tags: RequestTags,
    pub fingerprint: String,
    pub messages: Vec<ChatMessage>,
    pub response: Option<String>,
    pub error: Option<String>,
    pub attempts: u32,
}

pub struct Gateway {
    config: GatewayConfig,
    transport: Transport,
    log: Mutex<Vec<LogEntry>>,
    network_calls: AtomicU64,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.config.backend)
            .field("model", &self.config.model)
            .finish()
    }
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self> {
        config.validate()?;
        let transport = match config.backend {
            Backend::Stub => {
                let path = config.fixture.as_ref().expect("validated");
                Transport::Stub(Mutex::new(StubState::new(load_fixture(path)?)))
            }
            Backend::Http => {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
                    .http_status_as_error(false)
                    .build()
                    .into();
                Transport::Http(agent)
            }
        };
        Ok(Self {
            config,
            transport,
            log: Mutex::new(Vec::new()),
            network_calls: AtomicU64::new(0),
        })
    }

    /// Stub gateway over in-memory fixture entries.
    pub fn stub(entries: Vec<FixtureEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("stub fixture is empty"));
        }
        Ok(Self {
            config: GatewayConfig::default(),
            transport: Transport::Stub(Mutex::new(StubState::new(entries))),
            log: Mutex::new(Vec::new()),
            network_calls: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Request with the configured model and sampling settings.
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        }
    }

    /// Number of HTTP requests actually sent.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn log_entries(&self) -> Vec<LogEntry> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn complete(&self, request: &ChatRequest, tags: RequestTags) -> Result<String> {
        request.validate()?;
        let fingerprint = request.fingerprint();
        let (result, attempts) = match &self.transport {
            Transport::Stub(state) => (Ok(state.lock().expect("stub lock").next(&fingerprint)), 1),
            Transport::Http(agent) => self.complete_http(agent, request),
        };
        self.log.lock().expect("log lock").push(LogEntry {
            tags,
            fingerprint,
            messages: request.messages.clone(),
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(ToString::to_string),
            attempts,
        });
        result
    }

    fn complete_http(&self, agent: &ureq::Agent, request: &ChatRequest) -> (Result<String>, u32) {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let body = serde_json::json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let total = self.config.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..total {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let mut req = agent.post(endpoint);
            if let Some(key) = &self.config.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            match req.send_json(&body) {
                Ok(mut resp) => {
                    let status = resp.status();
                    if !status.is_success() {
                        last_error = format!("HTTP {status}");
                        continue;
                    }
                    match resp.body_mut().read_json::<Value>() {
                        Ok(v) => match first_choice_content(&v) {
                            Some(s) => return (Ok(s), attempt + 1),
                            None => last_error = "response has no choices[0].message.content".into(),
                        },
                        Err(e) => last_error = format!("bad response body: {e}"),
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
            log::debug!("chat completion attempt {} failed: {last_error}", attempt + 1);
        }
        (
            Err(Error::Transport {
                attempts: total,
                message: last_error,
            }),
            total,
        )
    }
}

fn first_choice_content(v: &Value) -> Option<String> {
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

/// Substitutes `{name}` placeholders. Braces not wrapping an identifier are
/// left alone, so JSON examples inside templates survive.
pub fn render_prompt(template: &str, vars: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut missing = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let ident_len = after
            .char_indices()
            .take_while(|&(i, ch)| ch == '_' || ch.is_ascii_alphabetic() || (i > 0 && ch.is_ascii_digit()))
            .count();
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            let name = &after[..ident_len];
            match vars.get(name) {
                Some(v) => out.push_str(v),
                None => {
                    if !missing.iter().any(|m| m == name) {
                        missing.push(name.to_string());
                    }
                }
            }
            rest = &after[ident_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(Error::Template { missing })
    }
}

fn fenced_blocks(text: &str) -> impl Iterator<Item = &str> {
    text.split("```").skip(1).step_by(2).map(|block| {
        // Drop a language tag such as `json` on the opening fence.
        let trimmed = block.trim_start();
        match trimmed.find(['{', '[']) {
            Some(pos) if trimmed[..pos].chars().all(|c| c.is_ascii_alphanumeric() || c.is_whitespace()) => {
                &trimmed[pos..]
            }
            _ => trimmed,
        }
    })
}

fn first_json_value(text: &str) -> Option<Value> {
    for (pos, ch) in text.char_indices() {
        if ch != '{' && ch != '[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            return Some(v);
        }
    }
    None
}

fn first_integer(text: &str) -> Option<i64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let negative = i > 0 && bytes[i - 1] == b'-';
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: i64 = text[start..i].parse().ok()?;
            return Some(if negative { -n } else { n });
        }
        i += 1;
    }
    None
}

/// First fenced or bare JSON value in `text`, else its first integer token.
pub fn extract_structured(text: &str) -> Result<Value> {
    for block in fenced_blocks(text) {
        if let Some(v) = first_json_value(block) {
            return Ok(v);
        }
    }
    if let Some(v) = first_json_value(text) {
        return Ok(v);
    }
    if let Some(n) = first_integer(text) {
        return Ok(Value::from(n));
    }
    Err(Error::schema("no JSON value or integer found", text))
}
