//! Batch classification, run records and markdown reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checker::{semantic_partition, CheckConfig, Reference, VerdictKind};
use crate::corpus::{find, CorpusEntry};
use crate::harness::{
    build_prompt, classify_answer, extract_candidates, run_task, AuditLog, AuditRecord, CandidateRecord,
    CandidateResult, HarnessError, TaskKind, Transport,
};
use crate::parser::{normalize, parse_candidate, render};
use crate::relcore::Schema;

/// Verdict counts for one property and task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub property: String,
    pub correct: usize,
    pub syntax_error: usize,
    pub wrong: usize,
    /// Distinct normal forms among parseable candidates.
    pub unique_syntactic: usize,
    /// Scope-bounded equivalence classes among parseable candidates.
    pub semantic_classes: usize,
}

impl ReportRow {
    pub fn total(&self) -> usize {
        self.correct + self.syntax_error + self.wrong
    }

    pub fn from_results(property: &str, results: &[CandidateResult], schema: &Schema, cfg: &CheckConfig) -> Self {
        let count = |k| results.iter().filter(|r| r.verdict.kind() == k).count();
        let parsed: Vec<_> = results.iter().filter_map(|r| parse_candidate(&r.candidate, schema).ok()).collect();
        let forms: BTreeSet<String> = parsed.iter().map(|f| render(&normalize(f))).collect();
        ReportRow {
            property: property.to_string(),
            correct: count(VerdictKind::Correct),
            syntax_error: count(VerdictKind::SyntaxError),
            wrong: count(VerdictKind::Wrong),
            unique_syntactic: forms.len(),
            semantic_classes: semantic_partition(&parsed, schema, cfg).len(),
        }
    }
}

/// Settings that produced a run; stored with every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scope: usize,
    pub model: String,
    pub solution_count: usize,
    pub retry: bool,
    /// `builtin` or the corpus path.
    pub corpus: String,
}

/// Outcome of one task, replayable from its stored candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub config: RunConfig,
    pub task: TaskKind,
    pub property: String,
    pub model: String,
    pub retry_count: usize,
    pub candidates: Vec<CandidateRecord>,
    pub row: ReportRow,
}

impl RunRecord {
    /// A sketch task is solved when its final answer is correct.
    pub fn solved(&self) -> bool {
        !self.candidates.is_empty() && self.candidates.iter().all(|c| c.verdict == VerdictKind::Correct)
    }
}

/// Short deterministic id from the run's inputs.
pub fn run_id(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Classifies each candidate against the entry's reference.
pub fn classify_batch(entry: &CorpusEntry, candidates: &[String], cfg: &CheckConfig) -> (ReportRow, Vec<CandidateResult>) {
    let reference = Reference::new(&entry.reference, &entry.schema, cfg);
    let results: Vec<CandidateResult> = candidates
        .iter()
        .map(|c| CandidateResult { candidate: c.clone(), verdict: reference.classify(c, &entry.schema) })
        .collect();
    (ReportRow::from_results(&entry.id, &results, &entry.schema, cfg), results)
}

/// Reads a candidates file: JSON (an array of strings, or one string or
/// `{"candidate": ...}` object per line) or plain text with one candidate
/// per non-blank line.
pub fn parse_candidates_file(text: &str) -> Result<Vec<String>, String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| e.to_string());
    }
    if trimmed.starts_with('"') || trimmed.starts_with('{') {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Line {
            Text(String),
            Object { candidate: String },
        }
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<Line>(l)
                    .map(|v| match v {
                        Line::Text(s) | Line::Object { candidate: s } => s,
                    })
                    .map_err(|e| format!("line {}: {e}", i + 1))
            })
            .collect();
    }
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum AskError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("cannot write audit log: {0}")]
    Audit(#[from] std::io::Error),
}

/// Runs one task end to end: prompt, transport, extraction, classification
/// (with the sketch retry) and audit logging.
#[allow(clippy::too_many_arguments)]
pub fn ask(
    entries: &[CorpusEntry],
    property: &str,
    task: TaskKind,
    transport: &mut dyn Transport,
    run: &RunConfig,
    run_id: &str,
    audit: Option<&AuditLog>,
) -> Result<RunRecord, AskError> {
    let entry = find(entries, property).ok_or_else(|| AskError::UnknownProperty(property.to_string()))?;
    let cfg = CheckConfig::with_scope(run.scope);
    let req = build_prompt(task, entry, run.solution_count)?;
    match run_task(&req, transport, &entry.reference, &entry.schema, &cfg, run.retry) {
        Ok(outcome) => {
            if let Some(log) = audit {
                for ex in &outcome.exchanges {
                    log.append(&AuditRecord::from_exchange(run_id, &req, ex, run.scope))?;
                }
            }
            let results = outcome.results();
            Ok(RunRecord {
                run_id: run_id.to_string(),
                config: run.clone(),
                task,
                property: entry.id.clone(),
                model: outcome.model().to_string(),
                retry_count: outcome.retry_count(),
                candidates: results.iter().map(CandidateRecord::from).collect(),
                row: ReportRow::from_results(&entry.id, results, &entry.schema, &cfg),
            })
        }
        Err(HarnessError::Transport { request_id, source, messages, completed }) => {
            if let Some(log) = audit {
                for ex in &completed {
                    log.append(&AuditRecord::from_exchange(run_id, &req, ex, run.scope))?;
                }
                log.append(&AuditRecord {
                    run_id: run_id.to_string(),
                    request_id: request_id.clone(),
                    task,
                    property: entry.id.clone(),
                    model: transport.model().to_string(),
                    attempt: completed.len(),
                    scope: run.scope,
                    messages: messages.clone(),
                    response: None,
                    error: Some(source.to_string()),
                    candidates: Vec::new(),
                    sent_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                    received_at: None,
                    usage: None,
                })?;
            }
            Err(HarnessError::Transport { request_id, source, messages, completed }.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// A stored verdict that re-classification does not reproduce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub property: String,
    pub task: TaskKind,
    pub candidate: String,
    pub stored: VerdictKind,
    pub recomputed: Option<VerdictKind>,
}

fn entry_for<'a>(entries: &'a [CorpusEntry], property: &str) -> Option<&'a CorpusEntry> {
    find(entries, property)
}

/// Re-classifies the stored candidates of run records.
pub fn reclassify_records(records: &[RunRecord], entries: &[CorpusEntry]) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for r in records {
        let cfg = CheckConfig::with_scope(r.config.scope);
        let entry = entry_for(entries, &r.property);
        let reference = entry.map(|e| Reference::new(&e.reference, &e.schema, &cfg));
        for c in &r.candidates {
            let recomputed = entry.zip(reference.as_ref()).map(|(e, refr)| refr.classify(&c.candidate, &e.schema).kind());
            if recomputed != Some(c.verdict) {
                out.push(Mismatch {
                    property: r.property.clone(),
                    task: r.task,
                    candidate: c.candidate.clone(),
                    stored: c.verdict,
                    recomputed,
                });
            }
        }
    }
    out
}

/// Re-extracts and re-classifies every logged response, comparing with the
/// verdicts recorded at the time.
pub fn reclassify_audit(records: &[AuditRecord], entries: &[CorpusEntry]) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for r in records {
        let Some(raw) = &r.response else { continue };
        let mismatch = |candidate: String, stored, recomputed| Mismatch {
            property: r.property.clone(),
            task: r.task,
            candidate,
            stored,
            recomputed,
        };
        let Some(entry) = entry_for(entries, &r.property) else {
            out.extend(r.candidates.iter().map(|c| mismatch(c.candidate.clone(), c.verdict, None)));
            continue;
        };
        let reference = Reference::new(&entry.reference, &entry.schema, &CheckConfig::with_scope(r.scope));
        let fresh = classify_answer(raw, r.task, &reference, &entry.schema);
        let expected = extract_candidates(raw, r.task).unwrap_or_else(|_| vec![String::new()]);
        debug_assert_eq!(expected.len(), fresh.len());
        if fresh.len() != r.candidates.len() {
            out.push(mismatch(format!("<{} candidates logged, {} re-extracted>", r.candidates.len(), fresh.len()), VerdictKind::SyntaxError, None));
            continue;
        }
        for (stored, now) in r.candidates.iter().zip(&fresh) {
            if stored.candidate != now.candidate || stored.verdict != now.verdict.kind() {
                out.push(mismatch(stored.candidate.clone(), stored.verdict, Some(now.verdict.kind())));
            }
        }
    }
    out
}

fn escape(cell: &str) -> String {
    cell.replace('|', "\\|").replace('\n', " ")
}

/// Markdown with one table per task kind, rows alphabetical by property.
pub fn render_report(records: &[RunRecord]) -> String {
    let mut out = String::from("# Results\n");
    let scopes: BTreeSet<usize> = records.iter().map(|r| r.config.scope).collect();
    if !scopes.is_empty() {
        let list: Vec<String> = scopes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "\nVerdicts are bounded by scope {}.", list.join(", "));
    }
    for task in TaskKind::ALL {
        let mut rows: Vec<&RunRecord> = records.iter().filter(|r| r.task == task).collect();
        rows.sort_by(|a, b| a.property.cmp(&b.property).then_with(|| a.model.cmp(&b.model)));
        let _ = writeln!(out, "\n## {}\n", task.title());
        if task == TaskKind::SketchToAlloy {
            out.push_str("| Property | Model | Solved | Attempts | Correct | Syntax error | Wrong |\n");
            out.push_str("|---|---|:---:|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    escape(&r.property),
                    escape(&r.model),
                    if r.solved() { "✓" } else { "✗" },
                    r.retry_count + 1,
                    r.row.correct,
                    r.row.syntax_error,
                    r.row.wrong
                );
            }
        } else {
            out.push_str("| Property | Model | Correct | Syntax error | Wrong | Total | Unique (syntactic) | Semantic classes |\n");
            out.push_str("|---|---|---:|---:|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} |",
                    escape(&r.property),
                    escape(&r.model),
                    r.row.correct,
                    r.row.syntax_error,
                    r.row.wrong,
                    r.row.total(),
                    r.row.unique_syntactic,
                    r.row.semantic_classes
                );
            }
        }
    }
    out
}
