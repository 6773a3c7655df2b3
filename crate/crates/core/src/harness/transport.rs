use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// One chat exchange. `task` and `property` identify the conversation for
/// transports that replay recorded answers.
#[derive(Debug, Clone)]
pub struct ChatRequest<'a> {
    pub task: TaskKind,
    pub property: &'a str,
    pub messages: &'a [Message],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt: u64,
    pub completion: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    pub model: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("no recorded response left for {task} {property}")]
    Exhausted { task: TaskKind, property: String },
}

/// Sends a conversation and returns the assistant's reply.
pub trait Transport {
    fn send(&mut self, request: &ChatRequest<'_>) -> Result<Reply, TransportError>;

    /// Model name recorded in reports.
    fn model(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplayResponse {
    Text(String),
    Error { error: String },
}

/// One line of a replay file: the answers for one task, in request order
/// (a second answer serves the retry).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub task: TaskKind,
    pub property: String,
    pub responses: Vec<ReplayResponse>,
}

/// Serves recorded answers; never touches the network.
#[derive(Debug, Clone, Default)]
pub struct ReplayTransport {
    model: String,
    queues: HashMap<(TaskKind, String), VecDeque<ReplayResponse>>,
}

#[derive(Debug, Error)]
pub enum ReplayFileError {
    #[error("cannot read replay file: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay file line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

impl ReplayTransport {
    pub fn new(model: impl Into<String>, records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        let mut queues: HashMap<(TaskKind, String), VecDeque<ReplayResponse>> = HashMap::new();
        for r in records {
            queues.entry((r.task, r.property.to_ascii_lowercase())).or_default().extend(r.responses);
        }
        ReplayTransport { model: model.into(), queues }
    }

    /// Parses a JSONL replay file; blank lines are skipped.
    pub fn parse(model: impl Into<String>, text: &str) -> Result<Self, ReplayFileError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(line).map_err(|source| ReplayFileError::Json { line: i + 1, source })?;
            records.push(r);
        }
        Ok(Self::new(model, records))
    }

    pub fn from_file(model: impl Into<String>, path: &Path) -> Result<Self, ReplayFileError> {
        Self::parse(model, &std::fs::read_to_string(path)?)
    }

    /// Builder-style single answer.
    pub fn with(mut self, task: TaskKind, property: &str, response: ReplayResponse) -> Self {
        self.queues.entry((task, property.to_ascii_lowercase())).or_default().push_back(response);
        self
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, request: &ChatRequest<'_>) -> Result<Reply, TransportError> {
        let key = (request.task, request.property.to_ascii_lowercase());
        let next = self.queues.get_mut(&key).and_then(VecDeque::pop_front);
        match next {
            Some(ReplayResponse::Text(text)) => Ok(Reply { text, model: self.model.clone(), usage: None }),
            Some(ReplayResponse::Error { error }) => Err(TransportError::Connection(error)),
            None => Err(TransportError::Exhausted { task: request.task, property: request.property.to_string() }),
        }
    }

    fn model(&self) -> &str {
        &self.model
    }
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::*;
    use crate::harness::TransportConfig;

    /// Client for OpenAI-style `/chat/completions` endpoints.
    pub struct HttpTransport {
        agent: ureq::Agent,
        config: TransportConfig,
        api_key: Option<String>,
    }

    impl HttpTransport {
        /// Reads the API key from the environment variable named in the
        /// config, if set.
        pub fn new(config: TransportConfig) -> Self {
            let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .into();
            HttpTransport { agent, config, api_key }
        }
    }

    impl Transport for HttpTransport {
        fn send(&mut self, request: &ChatRequest<'_>) -> Result<Reply, TransportError> {
            let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
            let body = json!({
                "model": self.config.model,
                "temperature": self.config.temperature,
                "messages": request.messages,
            });
            let mut req = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = req.send_json(&body).map_err(|e| TransportError::Connection(e.to_string()))?;
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| TransportError::Connection(e.to_string()))?;
            match status {
                200..=299 => {}
                401 | 403 => return Err(TransportError::Auth(text)),
                _ => return Err(TransportError::Status { status, body: text }),
            }
            let v: Value = serde_json::from_str(&text).map_err(|e| TransportError::Protocol(e.to_string()))?;
            let content = v["choices"][0]["message"]["content"]
                .as_str()
                .ok_or_else(|| TransportError::Protocol("missing choices[0].message.content".into()))?;
            let usage = v.get("usage").map(|u| TokenUsage {
                prompt: u["prompt_tokens"].as_u64().unwrap_or(0),
                completion: u["completion_tokens"].as_u64().unwrap_or(0),
            });
            let model = v["model"].as_str().unwrap_or(&self.config.model).to_string();
            Ok(Reply { text: content.to_string(), model, usage })
        }

        fn model(&self) -> &str {
            &self.config.model
        }
    }
}
