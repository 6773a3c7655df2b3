use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn relsketch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relsketch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let reference = write(d, "ref.als", "sig S { r: set S }\npred Irreflexive {\n  no iden & r\n}\n");
    let good = write(d, "good.als", "all s: S | s->s not in r");
    let bad = write(d, "bad.als", "no r");
    let broken = write(d, "broken.als", "all s: S | s not in s.");

    let out = relsketch(d, &["check", &reference, &good]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Equivalent: no counterexample within scope 3"));

    let out = relsketch(d, &["check", &reference, &bad]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("Counterexample (reference true, candidate false):"), "{}", stdout(&out));

    assert_eq!(code(&relsketch(d, &["check", &reference, &broken])), 2);
    assert_eq!(code(&relsketch(d, &["check", &reference, "missing.als"])), 2);

    // An explicit schema overrides the default.
    let node = write(d, "node.als", "no ^link & iden");
    let node2 = write(d, "node2.als", "all n: Node | n !in n.^link");
    let out = relsketch(d, &["check", "--schema", "sig Node { link: set Node }", &node, &node2]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn classify_appends_a_run_record() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cands = write(d, "cands.txt", "all s: S | s not in s.r\nno r\nall s: S | s not in s.\n");
    let out = relsketch(d, &["classify", "Irreflexive", &cands]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("Correct      all s: S | s not in s.r"));
    assert!(text.contains("Wrong        no r"));
    assert!(text.contains("SyntaxError  all s: S | s not in s."));
    let runs = fs::read_to_string(d.join("relsketch-out/runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 1);
    assert_eq!(code(&relsketch(d, &["classify", "Acyclic", &cands])), 2);
}

#[test]
fn sketch_solve_lists_completions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = relsketch(d, &["sketch", "solve", "Function"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("Function: raw=15 skipped=0 correct=1"), "{}", stdout(&out));

    let unsolvable = write(d, "sk.txt", "all s: S | \\E,e\\ in r\ne := {| S->s |}");
    assert_eq!(code(&relsketch(d, &["sketch", "solve", "Reflexive", "--sketch", &unsolvable])), 1);
    let broken = write(d, "broken.txt", "all s: S | \\E,e\\ in r");
    assert_eq!(code(&relsketch(d, &["sketch", "solve", "Reflexive", "--sketch", &broken])), 2);
}

#[test]
fn ask_then_report_with_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let replay = fixture("replay.jsonl");
    let replay = replay.to_str().unwrap();
    let out = relsketch(d, &["--replay", replay, "ask", "sketch-to-alloy", "Circular"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("solved=true attempts=2"), "{}", stdout(&out));

    let out = relsketch(d, &["report", "--verify"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("| Circular | replay | ✓ | 2 |"), "{}", stdout(&out));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verified 1 run records and 2 audit records: 0 mismatches"));
    assert!(d.join("relsketch-out/report.md").is_file());
}

#[test]
fn tampered_runs_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let replay = fixture("replay.jsonl");
    let out = relsketch(d, &["--replay", replay.to_str().unwrap(), "ask", "english-to-alloy", "Irreflexive"]);
    assert_eq!(code(&out), 0);
    let path = d.join("relsketch-out/runs.jsonl");
    let runs = fs::read_to_string(&path).unwrap();
    assert!(runs.contains(r#""verdict":"Correct""#), "{runs}");
    fs::write(&path, runs.replacen(r#""verdict":"Correct""#, r#""verdict":"Wrong""#, 1)).unwrap();
    assert_eq!(code(&relsketch(d, &["report", "--verify"])), 1);
}

#[test]
fn transport_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let empty = write(d, "empty.jsonl", "");
    assert_eq!(code(&relsketch(d, &["--replay", &empty, "ask", "english-to-alloy", "DAG"])), 3);
    let audit = fs::read_to_string(d.join("relsketch-out/audit.jsonl")).unwrap();
    assert!(audit.contains(r#""error""#));

    let config = write(d, "cfg.toml", "[transport]\nbase_url = \"http://127.0.0.1:9\"\ntimeout_secs = 2\n");
    assert_eq!(code(&relsketch(d, &["ask", "english-to-alloy", "DAG", "--config", &config])), 3);
}

#[test]
fn report_without_records_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&relsketch(dir.path(), &["report"])), 2);
}
