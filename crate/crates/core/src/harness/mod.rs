//! Prompting LLMs with the three task kinds and validating their answers.

mod audit;
mod extract;
mod prompt;
mod transport;

pub use audit::{AuditLog, AuditRecord};
pub use extract::extract_candidates;
pub use prompt::{build_prompt, PromptRequest};
#[cfg(feature = "http")]
pub use transport::HttpTransport;
pub use transport::{
    ChatRequest, Message, ReplayFileError, ReplayRecord, ReplayResponse, ReplayTransport, Reply, Role, TokenUsage,
    Transport, TransportError,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checker::{CheckConfig, Reference, Verdict};
use crate::relcore::{Formula, InstanceData, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    EnglishToAlloy,
    AlloyToAlloy,
    SketchToAlloy,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::EnglishToAlloy, TaskKind::AlloyToAlloy, TaskKind::SketchToAlloy];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::EnglishToAlloy => "english-to-alloy",
            TaskKind::AlloyToAlloy => "alloy-to-alloy",
            TaskKind::SketchToAlloy => "sketch-to-alloy",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TaskKind::EnglishToAlloy => "English to Alloy",
            TaskKind::AlloyToAlloy => "Alloy to Alloy",
            TaskKind::SketchToAlloy => "Sketch to Alloy",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "english-to-alloy" | "english" => Ok(TaskKind::EnglishToAlloy),
            "alloy-to-alloy" | "alloy" => Ok(TaskKind::AlloyToAlloy),
            "sketch-to-alloy" | "sketch" => Ok(TaskKind::SketchToAlloy),
            _ => Err(format!("unknown task kind `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus entry `{property}` has no {field}")]
    MissingField { property: String, field: &'static str },
    #[error("the response contains no candidate")]
    EmptyResponse,
    #[error("request {request_id}: {source}")]
    Transport {
        request_id: String,
        #[source]
        source: TransportError,
        /// The conversation of the failed request.
        messages: Vec<Message>,
        /// Exchanges completed before the failure.
        completed: Vec<Exchange>,
    },
}

/// Endpoint settings, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            temperature: 1.0,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 300,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ConfigFile {
    #[serde(default)]
    transport: TransportConfig,
}

impl TransportConfig {
    /// Parses the `[transport]` table of a TOML config.
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str::<ConfigFile>(text).map(|c| c.transport)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateResult {
    pub candidate: String,
    pub verdict: Verdict,
}

/// Serializable form of a [`CandidateResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub candidate: String,
    pub verdict: crate::checker::VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<InstanceData>,
}

impl From<&CandidateResult> for CandidateRecord {
    fn from(r: &CandidateResult) -> Self {
        let (error, counterexample) = match &r.verdict {
            Verdict::Correct => (None, None),
            Verdict::SyntaxError(e) => (Some(e.to_string()), None),
            Verdict::Wrong(i) => (None, Some(i.to_data())),
        };
        CandidateRecord { candidate: r.candidate.clone(), verdict: r.verdict.kind(), error, counterexample }
    }
}

/// One request/response pair.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub request_id: String,
    pub attempt: usize,
    pub messages: Vec<Message>,
    pub reply: Reply,
    pub sent_at: String,
    pub received_at: String,
    pub results: Vec<CandidateResult>,
}

#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub request: PromptRequest,
    pub exchanges: Vec<Exchange>,
}

impl TaskOutcome {
    /// Verdicts of the last answer.
    pub fn results(&self) -> &[CandidateResult] {
        self.exchanges.last().map_or(&[], |e| e.results.as_slice())
    }

    pub fn retry_count(&self) -> usize {
        self.exchanges.len().saturating_sub(1)
    }

    pub fn model(&self) -> &str {
        self.exchanges.last().map_or("", |e| e.reply.model.as_str())
    }
}

/// Deterministic id for one request of a task.
pub fn request_id(req: &PromptRequest, attempt: usize) -> String {
    let mut h = Sha256::new();
    h.update(req.task.name());
    h.update([0]);
    h.update(&req.property);
    h.update([0]);
    h.update(&req.prompt);
    h.update(attempt.to_le_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Classifies every candidate of an answer. An answer with no candidate
/// counts as one empty candidate, which is a syntax error.
pub fn classify_answer(raw: &str, task: TaskKind, reference: &Reference, schema: &Schema) -> Vec<CandidateResult> {
    let candidates = extract_candidates(raw, task).unwrap_or_else(|_| vec![String::new()]);
    candidates
        .into_iter()
        .map(|candidate| {
            let verdict = reference.classify(&candidate, schema);
            CandidateResult { candidate, verdict }
        })
        .collect()
}

fn follow_up(err: &crate::parser::ParseError) -> String {
    format!(
        "The completed predicate has a syntax error at line {}, column {}: {}. Please try again. \
Output only the completed predicate (without markdown or comments).",
        err.line, err.column, err.message
    )
}

/// Sends the prompt, classifies the answer and, for sketch tasks with
/// `retry` set, asks once more when the only candidate is a syntax error.
pub fn run_task(
    req: &PromptRequest,
    transport: &mut dyn Transport,
    ground_truth: &Formula,
    schema: &Schema,
    cfg: &CheckConfig,
    retry: bool,
) -> Result<TaskOutcome, HarnessError> {
    let reference = Reference::new(ground_truth, schema, cfg);
    let mut messages = vec![Message::user(&req.prompt)];
    let mut exchanges: Vec<Exchange> = Vec::new();
    loop {
        let attempt = exchanges.len();
        let request_id = request_id(req, attempt);
        let sent_at = now();
        let chat = ChatRequest { task: req.task, property: &req.property, messages: &messages };
        let reply = match transport.send(&chat) {
            Ok(r) => r,
            Err(source) => return Err(HarnessError::Transport { request_id, source, messages, completed: exchanges }),
        };
        let received_at = now();
        let results = classify_answer(&reply.text, req.task, &reference, schema);
        let syntax_error = match results.as_slice() {
            [CandidateResult { verdict: Verdict::SyntaxError(e), .. }] => Some(e.clone()),
            _ => None,
        };
        let sent = messages.clone();
        messages.push(Message::assistant(&reply.text));
        exchanges.push(Exchange { request_id, attempt, messages: sent, reply, sent_at, received_at, results });
        match syntax_error {
            Some(e) if retry && req.task == TaskKind::SketchToAlloy && attempt == 0 => {
                messages.push(Message::user(follow_up(&e)));
            }
            _ => break,
        }
    }
    Ok(TaskOutcome { request: req.clone(), exchanges })
}
