//! The subject properties and the corpus file format.
//!
//! ```text
//! [Reflexive]
//! description = Every element in S is related to itself
//! schema = sig S { r: set S }
//! reference = <<<
//! all s: S | s->s in r
//! >>>
//! sketch = <<<
//! ...
//! >>>
//! ```
//!
//! Lines starting with `#` outside `<<< >>>` blocks are comments.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::checker::{find_instances, CheckConfig};
use crate::parser::{parse_candidate, ParseError};
use crate::relcore::{Formula, Schema};
use crate::sketch::{parse_sketch, solve_sketch, Sketch};

const BUILTIN: &str = include_str!("builtin.corpus");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub description: String,
    pub schema: Schema,
    /// Reference body as written, possibly over several lines.
    pub reference_text: String,
    pub reference: Formula,
    /// Sketch as written, including its candidate set definitions.
    pub sketch_text: String,
    pub sketch: Sketch,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("entry `{entry}`: {invariant}")]
    Validation { entry: String, invariant: String },
}

/// The eleven built-in properties in their canonical order.
pub fn builtin_corpus() -> Vec<CorpusEntry> {
    parse_corpus(BUILTIN).expect("built-in corpus is well formed")
}

/// The text of the built-in corpus file.
pub fn builtin_corpus_text() -> &'static str {
    BUILTIN
}

/// Case-insensitive lookup by id.
pub fn find<'a>(entries: &'a [CorpusEntry], id: &str) -> Option<&'a CorpusEntry> {
    entries.iter().find(|e| e.id.eq_ignore_ascii_case(id))
}

/// Reads and fully validates a corpus file, including that every sketch
/// has a correct completion within `cfg`.
pub fn load_corpus(path: &Path, cfg: &CheckConfig) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let entries = parse_corpus(&text)?;
    for e in &entries {
        validate_entry(e, cfg)?;
    }
    Ok(entries)
}

/// Semantic checks beyond parsing: the reference is satisfiable and the
/// sketch is solvable.
pub fn validate_entry(e: &CorpusEntry, cfg: &CheckConfig) -> Result<(), CorpusError> {
    let fail = |invariant: &str| CorpusError::Validation { entry: e.id.clone(), invariant: invariant.to_string() };
    if find_instances(&e.reference, &e.schema, cfg, 1).is_empty() {
        return Err(fail("reference is unsatisfiable within scope"));
    }
    if solve_sketch(&e.sketch, &e.reference, &e.schema, cfg).correct.is_empty() {
        return Err(fail("sketch has no completion equivalent to the reference"));
    }
    Ok(())
}

#[derive(Default)]
struct Raw {
    id: String,
    description: Option<String>,
    schema: Option<(usize, String)>,
    reference: Option<(usize, String)>,
    sketch: Option<(usize, String)>,
}

/// Parses corpus text and checks that each entry's parts parse.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut raws: Vec<Raw> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line_no = i + 1;
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(id) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let id = id.trim();
            if id.is_empty() {
                return Err(CorpusError::Format { line: line_no, message: "empty entry id".into() });
            }
            if raws.iter().any(|r| r.id == id) {
                return Err(CorpusError::Format { line: line_no, message: format!("duplicate entry `{id}`") });
            }
            raws.push(Raw { id: id.to_string(), ..Raw::default() });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CorpusError::Format { line: line_no, message: format!("expected `key = value`, found `{line}`") });
        };
        let Some(raw) = raws.last_mut() else {
            return Err(CorpusError::Format { line: line_no, message: "key outside of an entry".into() });
        };
        let value = value.trim();
        let value = if value == "<<<" {
            let start = i;
            while i < lines.len() && lines[i].trim() != ">>>" {
                i += 1;
            }
            if i == lines.len() {
                return Err(CorpusError::Format { line: line_no, message: "unterminated `<<<` block".into() });
            }
            let block = lines[start..i].join("\n");
            i += 1;
            block
        } else {
            value.to_string()
        };
        let slot = match key.trim() {
            "description" => {
                raw.description = Some(value);
                continue;
            }
            "schema" => &mut raw.schema,
            "reference" => &mut raw.reference,
            "sketch" => &mut raw.sketch,
            other => {
                return Err(CorpusError::Format { line: line_no, message: format!("unknown key `{other}`") });
            }
        };
        *slot = Some((line_no, value));
    }
    raws.into_iter().map(build).collect()
}

fn build(raw: Raw) -> Result<CorpusEntry, CorpusError> {
    let fail = |invariant: String| CorpusError::Validation { entry: raw.id.clone(), invariant };
    let missing = |key: &str| fail(format!("missing `{key}`"));
    let description = raw.description.clone().ok_or_else(|| missing("description"))?;
    let (_, schema_text) = raw.schema.clone().ok_or_else(|| missing("schema"))?;
    let (ref_line, reference_text) = raw.reference.clone().ok_or_else(|| missing("reference"))?;
    let (sk_line, sketch_text) = raw.sketch.clone().ok_or_else(|| missing("sketch"))?;
    let schema = Schema::parse(&schema_text).map_err(|e| fail(format!("schema: {e}")))?;
    let at = |base: usize, e: ParseError| format!("line {}: {}", base + e.line, e);
    let reference = parse_candidate(&reference_text, &schema)
        .map_err(|e| fail(format!("reference does not parse: {}", at(ref_line, e))))?;
    let sketch = parse_sketch(&sketch_text).map_err(|e| fail(format!("sketch does not parse: {}", at(sk_line, e))))?;
    Ok(CorpusEntry { id: raw.id, description, schema, reference_text, reference, sketch_text, sketch })
}

/// Serializes entries in the corpus file format.
pub fn write_corpus(entries: &[CorpusEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[{}]\n", e.id));
        out.push_str(&format!("description = {}\n", e.description));
        out.push_str(&format!("schema = {}\n", e.schema));
        out.push_str(&format!("reference = <<<\n{}\n>>>\n", e.reference_text));
        out.push_str(&format!("sketch = <<<\n{}\n>>>\n", e.sketch_text));
    }
    out
}
