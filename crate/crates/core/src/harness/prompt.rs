use serde::{Deserialize, Serialize};

use super::{HarnessError, TaskKind};
use crate::corpus::CorpusEntry;

const SYNTHESIS: &str = "Give me {n} unique solutions to the problem of synthesizing the body of the following Alloy \
predicate (without markdown or comments) with respect to the property described in the comments:";

const SKETCHING: &str = "Complete the following sketch of the Alloy predicate (without markdown or comments) by \
selecting values for the holes with respect to the given constraints such that the predicate is correct with \
respect to the property described in the comments:";

/// A fully rendered query for one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub task: TaskKind,
    pub property: String,
    pub solution_count: usize,
    pub schema_text: String,
    pub prompt: String,
}

fn indented(text: &str) -> String {
    text.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

/// Renders the query for `task` over `entry`. `solution_count` is ignored
/// for sketches, which ask for a single completion.
pub fn build_prompt(task: TaskKind, entry: &CorpusEntry, solution_count: usize) -> Result<PromptRequest, HarnessError> {
    let missing = |field: &'static str| HarnessError::MissingField { property: entry.id.clone(), field };
    if entry.description.trim().is_empty() {
        return Err(missing("description"));
    }
    let schema_text = entry.schema.to_block_text();
    let prompt = match task {
        TaskKind::EnglishToAlloy | TaskKind::AlloyToAlloy => {
            let body = match task {
                TaskKind::EnglishToAlloy => "  // your code go here".to_string(),
                _ if entry.reference_text.trim().is_empty() => return Err(missing("reference")),
                _ => indented(entry.reference_text.trim_end()),
            };
            format!(
                "{}\n{schema_text}\npred {}{{\n  // {}\n{body}\n}}",
                SYNTHESIS.replace("{n}", &solution_count.to_string()),
                entry.id,
                entry.description,
            )
        }
        TaskKind::SketchToAlloy => {
            let sk = &entry.sketch;
            if sk.template.trim().is_empty() {
                return Err(missing("sketch"));
            }
            let mut text = format!("{SKETCHING}\n\n{schema_text}\npred {} {{\n  // {}\n", entry.id, entry.description);
            text.push_str(&sk.template);
            text.push_str("\n}\n");
            for d in sk.definitions() {
                text.push('\n');
                text.push_str(&d);
            }
            text
        }
    };
    Ok(PromptRequest { task, property: entry.id.clone(), solution_count, schema_text, prompt })
}
