//! Browser bindings. Every export takes plain strings and returns a JSON
//! string, so the page needs no generated TypeScript types.

use std::f64::consts::PI;
use std::fmt::Write as _;

use relsketch::checker::{check_equivalence, find_instances, CheckConfig, Equivalence};
use relsketch::corpus::{builtin_corpus, find};
use relsketch::parser::parse_candidate;
use relsketch::relcore::{Instance, Schema};
use relsketch::sketch::{parse_sketch, solve_sketch};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

// Keeps the page responsive: scope 3 over one binary field is instant,
// larger scopes on two sigs are not.
const MAX_SCOPE: usize = 3;

#[derive(Serialize)]
struct Entry<'a> {
    id: &'a str,
    description: &'a str,
    schema: String,
    reference: &'a str,
    sketch: &'a str,
}

fn error(message: impl ToString) -> Value {
    json!({ "ok": false, "error": message.to_string() })
}

fn scope(n: usize) -> CheckConfig {
    CheckConfig::with_scope(n.clamp(1, MAX_SCOPE))
}

fn schema(text: &str) -> Result<Schema, Value> {
    Schema::parse(text).map_err(|e| error(format!("schema: {e}")))
}

/// Atoms on a circle, one arrow per tuple, one colour per field.
pub fn instance_svg(inst: &Instance) -> String {
    const COLOURS: [&str; 4] = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700"];
    let u = inst.universe();
    let n = u.atom_count();
    let (size, radius, node) = (260.0, 90.0, 22.0);
    let centre = size / 2.0;
    let pos = |a: usize| {
        let t = 2.0 * PI * a as f64 / n.max(1) as f64 - PI / 2.0;
        (centre + radius * t.cos(), centre + radius * t.sin())
    };
    let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">"#);
    svg.push_str(concat!(
        r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse">"#,
        r#"<path d="M 0 0 L 10 5 L 0 10 z" fill="context-stroke"/></marker></defs>"#
    ));
    for (f, (name, rel)) in inst.relations().enumerate() {
        let colour = COLOURS[f % COLOURS.len()];
        for t in rel.tuples() {
            let (a, b) = (t[0] as usize, t[1] as usize);
            let (x1, y1) = pos(a);
            if a == b {
                let (dx, dy) = ((x1 - centre) / radius, (y1 - centre) / radius);
                let (cx, cy) = (x1 + dx * node * 1.4, y1 + dy * node * 1.4);
                let _ = write!(
                    svg,
                    r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="none" stroke="{colour}" stroke-width="2"><title>{name}</title></circle>"#,
                    node * 0.6
                );
                continue;
            }
            let (x2, y2) = pos(b);
            let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
            let (ux, uy) = ((x2 - x1) / len, (y2 - y1) / len);
            // Bend each edge to the right so a pair of opposite edges stays apart.
            let (mx, my) = ((x1 + x2) / 2.0 - uy * 18.0, (y1 + y2) / 2.0 + ux * 18.0);
            let _ = write!(
                svg,
                r#"<path d="M {:.1} {:.1} Q {mx:.1} {my:.1} {:.1} {:.1}" fill="none" stroke="{colour}" stroke-width="2" marker-end="url(#arrow)"><title>{name}</title></path>"#,
                x1 + ux * node,
                y1 + uy * node,
                x2 - ux * node,
                y2 - uy * node
            );
        }
    }
    for a in 0..n {
        let (x, y) = pos(a);
        let _ = write!(
            svg,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="{node}" fill="#f6f8fa" stroke="#57606a"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-family="monospace" font-size="12">{}</text>"##,
            y + 4.0,
            u.atom_name(a as u32)
        );
    }
    if n == 0 {
        let _ = write!(svg, r#"<text x="{centre}" y="{centre}" text-anchor="middle" font-family="sans-serif">no atoms</text>"#);
    }
    svg.push_str("</svg>");
    svg
}

fn instance_json(inst: &Instance) -> Value {
    json!({ "text": inst.to_string(), "data": inst.to_data(), "svg": instance_svg(inst) })
}

/// The built-in properties, for populating the page.
pub fn corpus_value() -> Value {
    let entries = builtin_corpus();
    let list: Vec<Entry> = entries
        .iter()
        .map(|e| Entry {
            id: &e.id,
            description: &e.description,
            schema: e.schema.to_string(),
            reference: &e.reference_text,
            sketch: &e.sketch_text,
        })
        .collect();
    json!({ "ok": true, "entries": list })
}

pub fn check_value(schema_text: &str, reference: &str, candidate: &str, max_scope: usize) -> Value {
    let schema = match schema(schema_text) {
        Ok(s) => s,
        Err(e) => return e,
    };
    let p = match parse_candidate(reference, &schema) {
        Ok(f) => f,
        Err(e) => return error(format!("reference: {e}")),
    };
    let q = match parse_candidate(candidate, &schema) {
        Ok(f) => f,
        Err(e) => return error(format!("candidate: {e}")),
    };
    let cfg = scope(max_scope);
    match check_equivalence(&p, &q, &schema, &cfg) {
        Equivalence::Equivalent => json!({ "ok": true, "equivalent": true, "scope": cfg.max_scope }),
        Equivalence::Counterexample { instance, p_value, q_value } => json!({
            "ok": true,
            "equivalent": false,
            "scope": cfg.max_scope,
            "reference_holds": p_value,
            "candidate_holds": q_value,
            "instance": instance_json(&instance),
        }),
    }
}

pub fn instances_value(schema_text: &str, formula: &str, max_scope: usize, limit: usize) -> Value {
    let schema = match schema(schema_text) {
        Ok(s) => s,
        Err(e) => return e,
    };
    let f = match parse_candidate(formula, &schema) {
        Ok(f) => f,
        Err(e) => return error(e),
    };
    let cfg = scope(max_scope);
    let found = find_instances(&f, &schema, &cfg, limit.clamp(1, 50));
    json!({ "ok": true, "scope": cfg.max_scope, "instances": found.iter().map(instance_json).collect::<Vec<_>>() })
}

/// Solves `sketch_text` against the reference of a built-in property; an
/// empty text solves the property's own sketch.
pub fn solve_value(property: &str, sketch_text: &str, max_scope: usize) -> Value {
    let entries = builtin_corpus();
    let Some(entry) = find(&entries, property) else {
        return error(format!("unknown property `{property}`"));
    };
    let sketch = if sketch_text.trim().is_empty() {
        entry.sketch.clone()
    } else {
        match parse_sketch(sketch_text) {
            Ok(s) => s,
            Err(e) => return error(e),
        }
    };
    let cfg = scope(max_scope);
    let sol = solve_sketch(&sketch, &entry.reference, &entry.schema, &cfg);
    json!({
        "ok": true,
        "scope": cfg.max_scope,
        "raw": sol.raw,
        "skipped": sol.skipped,
        "correct": sol.correct.iter().map(|c| json!({ "text": c.text, "choices": c.choices })).collect::<Vec<_>>(),
    })
}

#[wasm_bindgen]
pub fn corpus() -> String {
    corpus_value().to_string()
}

#[wasm_bindgen]
pub fn check(schema: &str, reference: &str, candidate: &str, scope: usize) -> String {
    check_value(schema, reference, candidate, scope).to_string()
}

#[wasm_bindgen]
pub fn instances(schema: &str, formula: &str, scope: usize, limit: usize) -> String {
    instances_value(schema, formula, scope, limit).to_string()
}

#[wasm_bindgen]
pub fn solve(property: &str, sketch: &str, scope: usize) -> String {
    solve_value(property, sketch, scope).to_string()
}
