use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CandidateRecord, Exchange, Message, PromptRequest, TaskKind, TokenUsage};

/// One request/response pair as stored in the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub run_id: String,
    pub request_id: String,
    pub task: TaskKind,
    pub property: String,
    pub model: String,
    pub attempt: usize,
    pub scope: usize,
    pub messages: Vec<Message>,
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub candidates: Vec<CandidateRecord>,
    pub sent_at: String,
    pub received_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

impl AuditRecord {
    pub fn from_exchange(run_id: &str, req: &PromptRequest, ex: &Exchange, scope: usize) -> Self {
        AuditRecord {
            run_id: run_id.to_string(),
            request_id: ex.request_id.clone(),
            task: req.task,
            property: req.property.clone(),
            model: ex.reply.model.clone(),
            attempt: ex.attempt,
            scope,
            messages: ex.messages.clone(),
            response: Some(ex.reply.text.clone()),
            error: None,
            candidates: ex.results.iter().map(CandidateRecord::from).collect(),
            sent_at: ex.sent_at.clone(),
            received_at: Some(ex.received_at.clone()),
            usage: ex.reply.usage,
        }
    }
}

/// Append-only JSONL writer; one line per record, flushed immediately.
#[derive(Debug)]
pub struct AuditLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl AuditLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog { path: path.to_path_buf(), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &AuditRecord) -> io::Result<()> {
        let mut line = serde_json::to_string(record).map_err(io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }

    pub fn read(path: &Path) -> io::Result<Vec<AuditRecord>> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
        }
        Ok(out)
    }
}
