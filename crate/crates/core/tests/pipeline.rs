use relsketch::checker::{CheckConfig, VerdictKind};
use relsketch::corpus::{builtin_corpus, find, CorpusEntry};
use relsketch::harness::{AuditLog, ReplayResponse, ReplayTransport, TaskKind};
use relsketch::pipeline::{
    ask, classify_batch, parse_candidates_file, reclassify_audit, reclassify_records, render_report, run_id, AskError,
    RunConfig, RunRecord,
};

const DAG_FORMULAS: [&str; 11] = [
    "no ^link & iden",
    "all n: Node | n not in n.^link",
    "not some n: Node | n in n.^link",
    "all n: Node | no n.^link & n",
    "^link = ^link - iden",
    "no iden & ^link",
    "all n: Node | (n.^link & n) = none",
    "all n: Node | #(n.^link & n) = 0",
    "all n: Node | lone (n.^link & n) => no (n.^link & n)",
    "all n: Node | no n & n.^link",
    "^link in (^link - iden)",
];

fn entry(id: &str) -> CorpusEntry {
    find(&builtin_corpus(), id).unwrap().clone()
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn config() -> RunConfig {
    RunConfig { scope: 3, model: "mock".into(), solution_count: 20, retry: true, corpus: "builtin".into() }
}

#[test]
fn dag_batch_is_all_correct_and_one_class() {
    let (row, results) = classify_batch(&entry("DAG"), &strings(&DAG_FORMULAS), &CheckConfig::default());
    assert_eq!((row.correct, row.syntax_error, row.wrong), (11, 0, 0));
    assert_eq!(row.semantic_classes, 1);
    // `no iden & ^link` and `no ^link & iden` share a normal form, as do the
    // two orderings of `no n & n.^link`.
    assert_eq!(row.unique_syntactic, 9);
    assert_eq!(results.len(), 11);
}

#[test]
fn mixed_batch_counts() {
    let irr = entry("Irreflexive");
    let cands = strings(&["all s: S | s not in s.r", "no r", "", "all s: S | s->s not in r"]);
    let (row, _) = classify_batch(&irr, &cands, &CheckConfig::default());
    assert_eq!((row.correct, row.syntax_error, row.wrong), (2, 1, 1));
    assert_eq!(row.total(), 4);
    assert_eq!(row.semantic_classes, 2);
    assert_eq!(row.unique_syntactic, 3);
}

#[test]
fn candidates_file_formats() {
    assert_eq!(parse_candidates_file(r#"["no r", "some r"]"#).unwrap(), ["no r", "some r"]);
    assert_eq!(parse_candidates_file("\"no r\"\n{\"candidate\": \"some r\"}\n").unwrap(), ["no r", "some r"]);
    assert_eq!(parse_candidates_file("no r\n\n  some r  \n").unwrap(), ["no r", "some r"]);
    assert!(parse_candidates_file("[1, 2]").is_err());
}

#[test]
fn run_ids_separate_their_parts() {
    assert_eq!(run_id(&["a", "b"]), run_id(&["a", "b"]));
    assert_ne!(run_id(&["ab", ""]), run_id(&["a", "b"]));
    assert_eq!(run_id(&["x"]).len(), 16);
}

fn transport() -> ReplayTransport {
    ReplayTransport::new("mock", [])
        .with(TaskKind::EnglishToAlloy, "Irreflexive", ReplayResponse::Text("1. no r\n2. all s: S | s not in s.r\n3. #r <= 1".into()))
        .with(TaskKind::SketchToAlloy, "Function", ReplayResponse::Text("all s: S | one s.r;".into()))
        .with(TaskKind::SketchToAlloy, "Function", ReplayResponse::Text("all s: S | one s.r".into()))
        .with(TaskKind::AlloyToAlloy, "DAG", ReplayResponse::Text(DAG_FORMULAS.join("\n\n")))
}

fn run_all(audit: Option<&AuditLog>) -> Vec<RunRecord> {
    let entries = builtin_corpus();
    let mut t = transport();
    [(TaskKind::EnglishToAlloy, "Irreflexive"), (TaskKind::SketchToAlloy, "Function"), (TaskKind::AlloyToAlloy, "DAG")]
        .into_iter()
        .map(|(task, p)| ask(&entries, p, task, &mut t, &config(), "run", audit).unwrap())
        .collect()
}

#[test]
fn ask_records_and_audits() {
    let dir = tempfile::tempdir().unwrap();
    let log = AuditLog::open(&dir.path().join("audit.jsonl")).unwrap();
    let records = run_all(Some(&log));

    let irr = &records[0];
    assert_eq!((irr.row.correct, irr.row.syntax_error, irr.row.wrong), (1, 1, 1));
    let func = &records[1];
    assert_eq!(func.retry_count, 1);
    assert!(func.solved());
    assert_eq!(records[2].row.correct, 11);

    let audit = AuditLog::read(&dir.path().join("audit.jsonl")).unwrap();
    assert_eq!(audit.len(), 4, "one record per exchange");
    assert!(reclassify_audit(&audit, &builtin_corpus()).is_empty());
    assert!(reclassify_records(&records, &builtin_corpus()).is_empty());
}

#[test]
fn ask_reports_unknown_properties_and_failures() {
    let entries = builtin_corpus();
    let mut t = ReplayTransport::new("mock", []);
    assert!(matches!(
        ask(&entries, "Acyclic", TaskKind::EnglishToAlloy, &mut t, &config(), "run", None),
        Err(AskError::UnknownProperty(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.jsonl");
    let log = AuditLog::open(&path).unwrap();
    assert!(matches!(
        ask(&entries, "DAG", TaskKind::EnglishToAlloy, &mut t, &config(), "run", Some(&log)),
        Err(AskError::Harness(_))
    ));
    let audit = AuditLog::read(&path).unwrap();
    assert_eq!(audit.len(), 1);
    assert!(audit[0].response.is_none() && audit[0].error.is_some());
    assert_eq!(audit[0].messages.len(), 1);
}

#[test]
fn tampered_records_are_flagged() {
    let mut records = run_all(None);
    records[0].candidates[0].verdict = VerdictKind::Correct;
    let m = reclassify_records(&records, &builtin_corpus());
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].candidate, "no r");
    assert_eq!(m[0].recomputed, Some(VerdictKind::Wrong));
}

#[test]
fn report_tables() {
    let empty = render_report(&[]);
    assert!(empty.starts_with("# Results\n"));
    for title in ["## English to Alloy", "## Alloy to Alloy", "## Sketch to Alloy"] {
        assert!(empty.contains(title), "{title}");
    }

    let report = render_report(&run_all(None));
    assert!(report.contains("Verdicts are bounded by scope 3."));
    assert!(report.contains("| Irreflexive | mock | 1 | 1 | 1 | 3 | 2 | 2 |"), "{report}");
    assert!(report.contains("| DAG | mock | 11 | 0 | 0 | 11 | 9 | 1 |"), "{report}");
    assert!(report.contains("| Function | mock | ✓ | 2 | 1 | 0 | 0 |"), "{report}");
    let english = report.find("## English").unwrap();
    let alloy = report.find("## Alloy").unwrap();
    let sketch = report.find("## Sketch").unwrap();
    assert!(english < alloy && alloy < sketch);
}

#[test]
fn records_round_trip_through_json() {
    for r in run_all(None) {
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RunRecord>(&text).unwrap(), r);
        assert_eq!(r.row.total(), r.candidates.len());
    }
}
