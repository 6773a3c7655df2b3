use super::{HarnessError, TaskKind};

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("//") || t.starts_with("--")
}

// `12. body` or `12) body`
fn numbered(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let digits = t.len() - t.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &t[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then(|| rest.trim())
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    match s.strip_prefix('`').and_then(|x| x.strip_suffix('`')) {
        Some(inner) if !inner.contains('`') => inner.trim(),
        _ => s,
    }
}

/// Pulls candidate formulas out of a raw answer.
///
/// Synthesis answers are split into numbered items (text before the first
/// number is ignored; an item may span several lines) or, without numbers,
/// into blank-line-separated blocks. Sketch answers yield the body inside
/// the outermost braces of the returned predicate, comment lines removed.
pub fn extract_candidates(raw: &str, task: TaskKind) -> Result<Vec<String>, HarnessError> {
    let lines: Vec<&str> = raw.lines().filter(|l| !is_fence(l)).collect();
    let out = match task {
        TaskKind::SketchToAlloy => {
            let text = lines.join("\n");
            let body = match (text.find('{'), text.rfind('}')) {
                (Some(a), Some(b)) if a < b && text[..a].contains("pred") => &text[a + 1..b],
                _ => text.as_str(),
            };
            let kept: Vec<&str> = body
                .lines()
                .filter(|l| !is_comment(l))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            if kept.is_empty() {
                Vec::new()
            } else {
                vec![kept.join("\n")]
            }
        }
        _ if lines.iter().any(|l| numbered(l).is_some()) => {
            let mut items: Vec<Vec<&str>> = Vec::new();
            for l in &lines {
                match numbered(l) {
                    Some(first) => items.push(vec![first]),
                    None if l.trim().is_empty() => {}
                    None => {
                        if let Some(item) = items.last_mut() {
                            item.push(l.trim_end());
                        }
                    }
                }
            }
            items.into_iter().map(|i| unquote(&i.join("\n")).to_string()).filter(|s| !s.is_empty()).collect()
        }
        _ => {
            let mut blocks: Vec<String> = Vec::new();
            let mut cur: Vec<&str> = Vec::new();
            for l in lines.iter().chain(std::iter::once(&"")) {
                if l.trim().is_empty() {
                    if !cur.is_empty() {
                        blocks.push(unquote(&cur.join("\n")).to_string());
                        cur.clear();
                    }
                } else {
                    cur.push(l.trim_end());
                }
            }
            blocks
        }
    };
    if out.is_empty() {
        Err(HarnessError::EmptyResponse)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_with_preamble_and_continuations() {
        let raw = "Here you go:\n1. no r\n2) all s: S |\n     s not in s.r\n\n3. `some r`";
        let got = extract_candidates(raw, TaskKind::EnglishToAlloy).unwrap();
        assert_eq!(got, ["no r", "all s: S |\n     s not in s.r", "some r"]);
    }

    #[test]
    fn blocks_and_fences() {
        let raw = "```alloy\nno r\n```\n\nall s: S | s->s in r\n";
        let got = extract_candidates(raw, TaskKind::AlloyToAlloy).unwrap();
        assert_eq!(got, ["no r", "all s: S | s->s in r"]);
    }

    #[test]
    fn sketch_body() {
        let raw = "pred P {\n  // note\n  all s: S | lone s.r\n}";
        assert_eq!(extract_candidates(raw, TaskKind::SketchToAlloy).unwrap(), ["all s: S | lone s.r"]);
        assert!(matches!(extract_candidates("  \n", TaskKind::SketchToAlloy), Err(HarnessError::EmptyResponse)));
    }
}
