//! Sketches: formula templates with typed holes and regular candidate sets.
//!
//! A sketch file is a predicate whose body contains hole markers, followed
//! by one `name := {| alt|alt|... |}` line per candidate set:
//!
//! ```text
//! pred DAG {
//!   // Directed acyclic graph
//!   all n: Node | \E,e\ \CO,co\ \E,e\
//! }
//! co := {| =|in|!=|!in |}
//! e := {| Node|n|((Node|n).(*|^)link) |}
//! ```

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::checker::{CheckConfig, Equivalence, Reference};
use crate::parser::{parse_candidate, ParseError};
use crate::relcore::{Formula, Quantifier, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoleKind {
    /// `\E,name\`
    Expr,
    /// `\O,name\` or `\CO,name\`
    Op,
    /// `\Q,name\`
    Quant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hole {
    pub kind: HoleKind,
    pub set: String,
    /// Byte range of the marker in the template.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub name: String,
    /// Verbatim `{| ... |}` text.
    pub pattern: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sketch {
    pub name: Option<String>,
    pub description: Option<String>,
    /// Body lines without comments, holes still in place.
    pub template: String,
    pub holes: Vec<Hole>,
    /// In definition order.
    pub sets: Vec<CandidateSet>,
}

const OPERATORS: [&str; 5] = ["=", "in", "!=", "!in", "not in"];

fn err(line: usize, column: usize, msg: impl Into<String>, snippet: &str) -> ParseError {
    ParseError::new(line, column, msg, snippet)
}

// `name := {| ... |}`
fn definition(line: &str) -> Option<(&str, &str)> {
    let (name, rest) = line.split_once(":=")?;
    let name = name.trim();
    let valid = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_');
    valid.then(|| (name, rest.trim()))
}

fn is_comment(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix("//").or_else(|| t.strip_prefix("--")).map(str::trim)
}

/// Parses a sketch with its candidate set definitions. The `pred` wrapper is
/// optional; comment lines inside the body become the description.
pub fn parse_sketch(text: &str) -> Result<Sketch, ParseError> {
    let text = text.replace("\r\n", "\n");
    let mut body_lines: Vec<(usize, &str)> = Vec::new();
    let mut sets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match definition(line) {
            Some((name, pattern)) => {
                if sets.iter().any(|s: &CandidateSet| s.name == name) {
                    return Err(err(i + 1, 1, format!("candidate set `{name}` defined twice"), line));
                }
                let values = expand_candidate_set(pattern).map_err(|mut e| {
                    e.line = i + 1;
                    e.column += line.find(pattern).unwrap_or(0);
                    e
                })?;
                sets.push(CandidateSet { name: name.to_string(), pattern: pattern.to_string(), values });
            }
            None if line.trim().is_empty() => {}
            None => body_lines.push((i + 1, line)),
        }
    }

    let mut name = None;
    if let Some(&(first_no, first)) = body_lines.first() {
        if let Some(rest) = first.trim_start().strip_prefix("pred") {
            let head = rest.trim();
            let Some(brace) = head.find('{') else {
                return Err(err(first_no, 1, "expected `{` after the predicate name", first));
            };
            let n = head[..brace].trim().trim_end_matches("()").trim_end_matches("[]").trim();
            name = (!n.is_empty()).then(|| n.to_string());
            let after = head[brace + 1..].trim();
            let last = body_lines.last().map(|&(_, l)| l.trim()).unwrap_or_default();
            if last != "}" || body_lines.len() < 2 || !after.is_empty() {
                return Err(err(first_no, 1, "the predicate must open on its own line and close with `}`", first));
            }
            body_lines.remove(0);
            body_lines.pop();
        }
    }

    let mut description = Vec::new();
    let mut template = Vec::new();
    for &(_, line) in &body_lines {
        match is_comment(line) {
            Some(c) => description.push(c.to_string()),
            None => template.push(line.trim_end()),
        }
    }
    let template = template.join("\n");

    let mut holes = Vec::new();
    let mut search = 0;
    while let Some(start) = template[search..].find('\\').map(|i| i + search) {
        let (line, column) = position(&template, start, &body_lines);
        let Some(len) = template[start + 1..].find('\\') else {
            return Err(err(line, column, "unterminated hole marker", &template[start..]));
        };
        let end = start + len + 2;
        let marker = &template[start..end];
        let inner = &marker[1..marker.len() - 1];
        let (kind, set) = inner
            .split_once(',')
            .ok_or_else(|| err(line, column, "hole marker needs a kind and a set name", marker))?;
        let kind = match kind.trim() {
            "E" => HoleKind::Expr,
            "O" | "CO" => HoleKind::Op,
            "Q" => HoleKind::Quant,
            other => return Err(err(line, column, format!("unknown hole kind `{other}`"), marker)),
        };
        let set = set.trim().to_string();
        let Some(cs) = sets.iter().find(|s| s.name == set) else {
            return Err(err(line, column, format!("undefined candidate set `{set}`"), marker));
        };
        let allowed: &dyn Fn(&str) -> bool = match kind {
            HoleKind::Expr => &|_| true,
            HoleKind::Op => &|v| OPERATORS.contains(&v),
            HoleKind::Quant => &|v| Quantifier::from_keyword(v).is_some(),
        };
        if let Some(bad) = cs.values.iter().find(|v| !allowed(v)) {
            return Err(err(line, column, format!("`{bad}` in set `{set}` cannot fill this hole"), marker));
        }
        holes.push(Hole { kind, set, span: start..end });
        search = end;
    }

    Ok(Sketch {
        name,
        description: (!description.is_empty()).then(|| description.join(" ")),
        template,
        holes,
        sets,
    })
}

// Maps a template offset back to a source position.
fn position(template: &str, offset: usize, lines: &[(usize, &str)]) -> (usize, usize) {
    let before = &template[..offset];
    let row = before.matches('\n').count();
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1);
    let content: Vec<usize> = lines.iter().filter(|(_, l)| is_comment(l).is_none()).map(|&(n, _)| n).collect();
    (content.get(row).copied().unwrap_or(1), col + 1)
}

/// Expands `{| alt1|alt2|... |}`. Alternatives are split on top-level `|`;
/// a parenthesized group with several alternatives is replaced by each of
/// them in turn (left to right, first group slowest). A group with a single
/// alternative keeps its parentheses unless it spans the whole alternative.
/// Order is preserved and duplicates are dropped.
pub fn expand_candidate_set(pattern: &str) -> Result<Vec<String>, ParseError> {
    let p = pattern.trim();
    let inner = p
        .strip_prefix("{|")
        .and_then(|s| s.strip_suffix("|}"))
        .ok_or_else(|| err(1, 1, "candidate set must be written `{| ... |}`", p))?;
    let offset = p.len() - p.trim_start_matches("{|").len();
    let mut out: Vec<String> = Vec::new();
    for alt in split_top(inner, offset)? {
        let alt = alt.trim();
        if alt.is_empty() {
            return Err(err(1, 1, "empty alternative in candidate set", p));
        }
        for v in expand(strip_outer(alt)) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    if out.is_empty() {
        return Err(err(1, 1, "empty candidate set", p));
    }
    Ok(out)
}

// Splits on `|` outside parentheses, checking balance.
fn split_top(s: &str, offset: usize) -> Result<Vec<&str>, ParseError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(err(1, offset + i + 1, "unbalanced `)`", ")"));
                }
            }
            '|' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(err(1, offset + s.len(), "unbalanced `(`", s));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

// Drops parentheses that enclose the whole alternative when they hold a
// single alternative.
fn strip_outer(alt: &str) -> &str {
    let mut s = alt;
    while let Some(inner) = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
        if closing_of(s) != Some(s.len() - 1) || split_top(inner, 0).map_or(true, |p| p.len() > 1) {
            break;
        }
        s = inner.trim();
    }
    s
}

fn closing_of(s: &str) -> Option<usize> {
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

// Input is balanced (checked by the caller).
fn expand(s: &str) -> Vec<String> {
    let mut acc = vec![String::new()];
    let mut rest = s;
    while !rest.is_empty() {
        let options: Vec<String> = match rest.find('(') {
            Some(0) => {
                let close = closing_of(rest).expect("balanced");
                let inner = &rest[1..close];
                let alts = split_top(inner, 0).expect("balanced");
                rest = &rest[close + 1..];
                if alts.len() > 1 {
                    alts.iter().flat_map(|a| expand(a.trim())).collect()
                } else {
                    expand(inner).into_iter().map(|x| format!("({x})")).collect()
                }
            }
            Some(i) => {
                let lit = rest[..i].to_string();
                rest = &rest[i..];
                vec![lit]
            }
            None => {
                let lit = rest.to_string();
                rest = "";
                vec![lit]
            }
        };
        acc = acc.iter().flat_map(|a| options.iter().map(move |o| format!("{a}{o}"))).collect();
    }
    acc
}

/// One filling of every hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    /// Candidate index chosen for each hole, in hole order.
    pub indices: Vec<usize>,
    pub choices: Vec<String>,
    /// The template with holes substituted.
    pub text: String,
    pub formula: Formula,
}

impl Sketch {
    pub fn set(&self, name: &str) -> Option<&CandidateSet> {
        self.sets.iter().find(|s| s.name == name)
    }

    /// Product of candidate set sizes over the holes.
    pub fn raw_count(&self) -> usize {
        self.holes.iter().map(|h| self.set(&h.set).map_or(0, |s| s.values.len())).product()
    }

    /// Substitutes one value per hole into the template.
    pub fn fill(&self, choices: &[&str]) -> String {
        assert_eq!(choices.len(), self.holes.len());
        let mut out = String::new();
        let mut last = 0;
        for (h, c) in self.holes.iter().zip(choices) {
            out.push_str(&self.template[last..h.span.start]);
            out.push_str(c);
            last = h.span.end;
        }
        out.push_str(&self.template[last..]);
        out
    }

    /// Candidate set definition lines, `name := {| ... |}`.
    pub fn definitions(&self) -> Vec<String> {
        self.sets.iter().map(|s| format!("{} := {}", s.name, s.pattern)).collect()
    }

    /// Every hole assignment in lexicographic order of candidate indices
    /// (first hole slowest), with the parse result of each.
    pub fn assignments<'a>(&'a self, schema: &'a Schema) -> impl Iterator<Item = Result<Completion, ParseError>> + 'a {
        let sizes: Vec<usize> = self.holes.iter().map(|h| self.set(&h.set).map_or(0, |s| s.values.len())).collect();
        let total = self.raw_count();
        (0..total).map(move |mut code| {
            let mut indices = vec![0; sizes.len()];
            for (slot, &size) in indices.iter_mut().zip(&sizes).rev() {
                *slot = code % size;
                code /= size;
            }
            let choices: Vec<String> = self
                .holes
                .iter()
                .zip(&indices)
                .map(|(h, &i)| self.set(&h.set).expect("validated").values[i].clone())
                .collect();
            let text = self.fill(&choices.iter().map(String::as_str).collect::<Vec<_>>());
            parse_candidate(&text, schema).map(|formula| Completion { indices, choices, text, formula })
        })
    }
}

impl fmt::Display for Sketch {
    /// The sketch file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrapped = self.name.is_some() || self.description.is_some();
        if wrapped {
            writeln!(f, "pred {} {{", self.name.as_deref().unwrap_or("Sketch"))?;
            if let Some(d) = &self.description {
                writeln!(f, "  // {d}")?;
            }
        }
        if !self.template.is_empty() {
            writeln!(f, "{}", self.template)?;
        }
        if wrapped {
            writeln!(f, "}}")?;
        }
        for d in self.definitions() {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Raw and skipped counts plus the well-typed completions.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub raw: usize,
    pub skipped: usize,
    pub completions: Vec<Completion>,
}

pub fn enumerate_completions(sk: &Sketch, schema: &Schema) -> Enumeration {
    let mut skipped = 0;
    let mut completions = Vec::new();
    for c in sk.assignments(schema) {
        match c {
            Ok(c) => completions.push(c),
            Err(_) => skipped += 1,
        }
    }
    Enumeration { raw: sk.raw_count(), skipped, completions }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub raw: usize,
    pub skipped: usize,
    /// Completions equivalent to the ground truth, in enumeration order.
    pub correct: Vec<Completion>,
}

/// Every completion equivalent to `ground_truth` within scope.
pub fn solve_sketch(sk: &Sketch, ground_truth: &Formula, schema: &Schema, cfg: &CheckConfig) -> Solution {
    let reference = Reference::new(ground_truth, schema, cfg);
    let all = enumerate_completions(sk, schema);
    let correct = all
        .completions
        .into_iter()
        .filter(|c| matches!(reference.check(&c.formula), Equivalence::Equivalent))
        .collect();
    Solution { raw: all.raw, skipped: all.skipped, correct }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_examples() {
        let dag = expand_candidate_set("{| Node|n|((Node|n).(*|^)link) |}").unwrap();
        assert_eq!(dag, ["Node", "n", "Node.*link", "Node.^link", "n.*link", "n.^link"]);
        let irr = expand_candidate_set("{| S|s|t|(s|t)->(s|t)|(s|t).r |}").unwrap();
        assert_eq!(irr, ["S", "s", "t", "s->s", "s->t", "t->s", "t->t", "s.r", "t.r"]);
        assert_eq!(expand_candidate_set("{| =|in|!=|!in |}").unwrap().len(), 4);
        assert_eq!(expand_candidate_set("{| (Node|m|n).(*|^)link |}").unwrap().len(), 6);
        assert_eq!(expand_candidate_set("{| r|s|(s.r) |}").unwrap(), ["r", "s", "s.r"]);
    }

    #[test]
    fn single_groups_keep_parens_inside() {
        assert_eq!(expand_candidate_set("{| (a).b |}").unwrap(), ["(a).b"]);
        assert_eq!(expand_candidate_set("{| a|a|(a) |}").unwrap(), ["a"]);
    }

    #[test]
    fn unbalanced_patterns() {
        assert!(expand_candidate_set("{| (a|b |}").is_err());
        assert!(expand_candidate_set("{| a)|b |}").is_err());
        assert!(expand_candidate_set("{| a|b").is_err());
        assert!(expand_candidate_set("{|  |}").is_err());
    }

    #[test]
    fn parses_markers() {
        let sk = parse_sketch(
            "pred Functional{\n  // partial function\n  all s: S | \\Q,q\\ \\E,e\\\n}\nq := {| all|no|some|lone|one |}\ne := {| r|s|(s.r) |}",
        )
        .unwrap();
        assert_eq!(sk.name.as_deref(), Some("Functional"));
        assert_eq!(sk.description.as_deref(), Some("partial function"));
        let kinds: Vec<HoleKind> = sk.holes.iter().map(|h| h.kind).collect();
        assert_eq!(kinds, [HoleKind::Quant, HoleKind::Expr]);
        assert_eq!(sk.raw_count(), 15);
        assert_eq!(sk.fill(&["lone", "s.r"]), "  all s: S | lone s.r");
    }

    #[test]
    fn bad_markers() {
        let e = parse_sketch("all s: S | \\X,e\\ in r\ne := {| s |}").unwrap_err();
        assert!(e.message.contains("unknown hole kind"), "{e}");
        let e = parse_sketch("all s: S | \\E,f\\ in r\ne := {| s |}").unwrap_err();
        assert!(e.message.contains("undefined"), "{e}");
        let e = parse_sketch("all s: S | s \\O,e\\ r\ne := {| s |}").unwrap_err();
        assert!(e.message.contains("cannot fill"), "{e}");
    }

    #[test]
    fn zero_holes() {
        let sk = parse_sketch("no r").unwrap();
        let schema = Schema::single("S", "r");
        let all = enumerate_completions(&sk, &schema);
        assert_eq!((all.raw, all.completions.len()), (1, 1));
    }
}
