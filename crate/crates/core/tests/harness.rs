use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use relsketch::checker::{CheckConfig, Verdict, VerdictKind};
use relsketch::corpus::{builtin_corpus, find, CorpusEntry};
use relsketch::harness::{
    build_prompt, extract_candidates, request_id, run_task, AuditLog, AuditRecord, ChatRequest, HarnessError,
    HttpTransport, Message, ReplayResponse, ReplayTransport, Role, TaskKind, Transport, TransportConfig,
    TransportError,
};

fn entry(id: &str) -> CorpusEntry {
    find(&builtin_corpus(), id).unwrap().clone()
}

const SYNTHESIS: &str = "Give me 20 unique solutions to the problem of synthesizing the body of the following Alloy predicate (without markdown or comments) with respect to the property described in the comments:";

#[test]
fn english_prompt_for_dag() {
    let p = build_prompt(TaskKind::EnglishToAlloy, &entry("DAG"), 20).unwrap();
    let expected = format!(
        "{SYNTHESIS}\nsig Node {{\n  link: set Node\n}}\npred DAG{{\n  // Directed acyclic graph\n  // your code go here\n}}"
    );
    assert_eq!(p.prompt, expected);
}

#[test]
fn alloy_prompt_for_dag() {
    let p = build_prompt(TaskKind::AlloyToAlloy, &entry("DAG"), 20).unwrap();
    let expected = format!(
        "{SYNTHESIS}\nsig Node {{\n  link: set Node\n}}\npred DAG{{\n  // Directed acyclic graph\n  all n: Node | n !in n.^link\n}}"
    );
    assert_eq!(p.prompt, expected);
}

#[test]
fn sketch_prompt_for_dag() {
    let p = build_prompt(TaskKind::SketchToAlloy, &entry("DAG"), 20).unwrap();
    let expected = "Complete the following sketch of the Alloy predicate (without markdown or comments) by selecting values for the holes with respect to the given constraints such that the predicate is correct with respect to the property described in the comments:\n\
\n\
sig Node {\n  link: set Node\n}\n\
pred DAG {\n  // Directed acyclic graph\n  all n: Node | \\E,e\\ \\CO,co\\ \\E,e\\\n}\n\
\n\
co := {| =|in|!=|!in |}\n\
e := {| Node|n|((Node|n).(*|^)link) |}";
    assert_eq!(p.prompt, expected);
}

#[test]
fn multi_line_references_are_indented() {
    let p = build_prompt(TaskKind::AlloyToAlloy, &entry("Transitive"), 5).unwrap();
    assert!(p.prompt.starts_with("Give me 5 unique"));
    assert!(p.prompt.ends_with("  all s, t, u: S |\n    s->t in r and t->u in r\n      implies s->u in r\n}"), "{}", p.prompt);
}

#[test]
fn request_ids_are_stable() {
    let p = build_prompt(TaskKind::SketchToAlloy, &entry("Circular"), 20).unwrap();
    assert_eq!(request_id(&p, 0), request_id(&p, 0));
    assert_ne!(request_id(&p, 0), request_id(&p, 1));
    assert_eq!(request_id(&p, 0).len(), 16);
}

#[test]
fn extraction_of_numbered_lists() {
    let raw = "Here are some:\n\n1. `no ^link & iden`\n2) all n: Node |\n     n !in n.^link\n3. some n: Node | n in n.^link\n";
    let c = extract_candidates(raw, TaskKind::EnglishToAlloy).unwrap();
    assert_eq!(c, ["no ^link & iden", "all n: Node |\n     n !in n.^link", "some n: Node | n in n.^link"]);
}

#[test]
fn extraction_of_fenced_blocks() {
    let raw = "```alloy\nall s: S | s not in s.r\n```\n\n```\nno iden & r\n```";
    let c = extract_candidates(raw, TaskKind::AlloyToAlloy).unwrap();
    assert_eq!(c, ["all s: S | s not in s.r", "no iden & r"]);
}

#[test]
fn extraction_of_sketch_answers() {
    let raw = "```\npred DAG {\n  // Directed acyclic graph\n  all n: Node | n !in n.^link\n}\n```";
    assert_eq!(extract_candidates(raw, TaskKind::SketchToAlloy).unwrap(), ["all n: Node | n !in n.^link"]);
    let bare = "all n: Node | n !in n.^link";
    assert_eq!(extract_candidates(bare, TaskKind::SketchToAlloy).unwrap(), [bare]);
    assert!(extract_candidates("  \n", TaskKind::SketchToAlloy).is_err());
    assert!(matches!(extract_candidates("", TaskKind::EnglishToAlloy), Err(HarnessError::EmptyResponse)));
}

fn replay(task: TaskKind, property: &str, answers: &[&str]) -> ReplayTransport {
    answers
        .iter()
        .fold(ReplayTransport::new("mock", []), |t, a| t.with(task, property, ReplayResponse::Text(a.to_string())))
}

fn run(e: &CorpusEntry, task: TaskKind, transport: &mut dyn Transport, retry: bool) -> Result<relsketch::harness::TaskOutcome, HarnessError> {
    let req = build_prompt(task, e, 20).unwrap();
    run_task(&req, transport, &e.reference, &e.schema, &CheckConfig::default(), retry)
}

#[test]
fn sketch_retry_after_syntax_error() {
    let e = entry("Function");
    let mut t = replay(
        TaskKind::SketchToAlloy,
        "Function",
        &["all s: S |\n  one s.r;", "pred Function {\n  all s: S | one s.r\n}"],
    );
    let out = run(&e, TaskKind::SketchToAlloy, &mut t, true).unwrap();
    assert_eq!(out.retry_count(), 1);
    assert_eq!(out.results().len(), 1);
    assert_eq!(out.results()[0].verdict, Verdict::Correct);
    assert!(matches!(out.exchanges[0].results[0].verdict, Verdict::SyntaxError(_)));

    // The retry carries the whole conversation plus the error report.
    let second = &out.exchanges[1].messages;
    assert_eq!(second.len(), 3);
    assert_eq!(second[0].role, Role::User);
    assert_eq!(second[1].role, Role::Assistant);
    assert!(second[2].content.contains("syntax error at line 2"), "{}", second[2].content);
}

#[test]
fn retry_happens_at_most_once() {
    let e = entry("Function");
    let mut t = replay(TaskKind::SketchToAlloy, "Function", &["all s: S | one s.r;", "all s: S |", "all s: S | one s.r"]);
    let out = run(&e, TaskKind::SketchToAlloy, &mut t, true).unwrap();
    assert_eq!(out.retry_count(), 1);
    assert_eq!(out.results()[0].verdict.kind(), VerdictKind::SyntaxError);
}

#[test]
fn no_retry_when_disabled_or_for_synthesis() {
    let e = entry("Function");
    let mut t = replay(TaskKind::SketchToAlloy, "Function", &["all s: S | one s.r;", "all s: S | one s.r"]);
    assert_eq!(run(&e, TaskKind::SketchToAlloy, &mut t, false).unwrap().retry_count(), 0);

    let mut t = replay(TaskKind::EnglishToAlloy, "Function", &["all s: S | one s.r;", "all s: S | one s.r"]);
    let out = run(&e, TaskKind::EnglishToAlloy, &mut t, true).unwrap();
    assert_eq!(out.retry_count(), 0);
    assert_eq!(out.results()[0].verdict.kind(), VerdictKind::SyntaxError);
}

#[test]
fn wrong_sketch_answers_are_not_retried() {
    let e = entry("Function");
    let mut t = replay(TaskKind::SketchToAlloy, "Function", &["all s: S | lone s.r", "all s: S | one s.r"]);
    let out = run(&e, TaskKind::SketchToAlloy, &mut t, true).unwrap();
    assert_eq!(out.retry_count(), 0);
    assert!(matches!(out.results()[0].verdict, Verdict::Wrong(_)));
}

#[test]
fn empty_answer_is_one_syntax_error() {
    let e = entry("DAG");
    let mut t = replay(TaskKind::EnglishToAlloy, "DAG", &["   "]);
    let out = run(&e, TaskKind::EnglishToAlloy, &mut t, true).unwrap();
    assert_eq!(out.results().len(), 1);
    assert_eq!(out.results()[0].candidate, "");
    assert_eq!(out.results()[0].verdict.kind(), VerdictKind::SyntaxError);
}

#[test]
fn transport_failure_keeps_completed_exchanges() {
    let e = entry("Circular");
    let mut t = ReplayTransport::new("mock", [])
        .with(TaskKind::SketchToAlloy, "Circular", ReplayResponse::Text("#Node = #link)".into()))
        .with(TaskKind::SketchToAlloy, "Circular", ReplayResponse::Error { error: "reset".into() });
    match run(&e, TaskKind::SketchToAlloy, &mut t, true) {
        Err(HarnessError::Transport { source, completed, messages, .. }) => {
            assert_eq!(source, TransportError::Connection("reset".into()));
            assert_eq!(completed.len(), 1);
            assert_eq!(messages.len(), 3);
        }
        other => panic!("{other:?}"),
    }
    let mut empty = ReplayTransport::new("mock", []);
    assert!(matches!(
        run(&e, TaskKind::EnglishToAlloy, &mut empty, true),
        Err(HarnessError::Transport { source: TransportError::Exhausted { .. }, .. })
    ));
}

#[test]
fn replay_files_parse() {
    let text = r#"{"task":"sketch-to-alloy","property":"DAG","responses":["a",{"error":"down"}]}

{"task":"english-to-alloy","property":"dag","responses":["b"]}"#;
    let mut t = ReplayTransport::parse("m", text).unwrap();
    let msgs = [Message::user("q")];
    let req = |task| ChatRequest { task, property: "DAG", messages: &msgs };
    assert_eq!(t.send(&req(TaskKind::SketchToAlloy)).unwrap().text, "a");
    assert!(t.send(&req(TaskKind::SketchToAlloy)).is_err());
    assert_eq!(t.send(&req(TaskKind::EnglishToAlloy)).unwrap().text, "b");
    assert!(ReplayTransport::parse("m", "{not json").is_err());
}

#[test]
fn transport_config_from_toml() {
    let cfg = TransportConfig::from_toml("[transport]\nmodel = \"o3-mini\"\ntimeout_secs = 30\n").unwrap();
    assert_eq!(cfg.model, "o3-mini");
    assert_eq!(cfg.timeout_secs, 30);
    assert_eq!(cfg.base_url, TransportConfig::default().base_url);
    assert_eq!(TransportConfig::from_toml("").unwrap(), TransportConfig::default());
    assert!(TransportConfig::from_toml("[transport]\ntimeout_secs = \"x\"").is_err());
}

#[test]
fn audit_log_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.jsonl");
    let e = entry("Function");
    let mut t = replay(TaskKind::SketchToAlloy, "Function", &["all s: S | one s.r;", "all s: S | one s.r"]);
    let req = build_prompt(TaskKind::SketchToAlloy, &e, 20).unwrap();
    let out = run_task(&req, &mut t, &e.reference, &e.schema, &CheckConfig::default(), true).unwrap();
    let log = AuditLog::open(&path).unwrap();
    let records: Vec<AuditRecord> = out.exchanges.iter().map(|x| AuditRecord::from_exchange("run", &req, x, 3)).collect();
    for r in &records {
        log.append(r).unwrap();
    }
    assert_eq!(AuditLog::read(&path).unwrap(), records);
    assert_eq!(records[1].attempt, 1);
    assert!(records[0].candidates[0].error.is_some());
}

// Serves one canned HTTP response and returns the request it received.
fn serve_once(status: &str, body: &str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let response = format!("HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream);
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            head.push_str(&line);
            if line == "\r\n" {
                break;
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        reader.get_mut().write_all(response.as_bytes()).unwrap();
        head + &String::from_utf8(body).unwrap()
    });
    (format!("http://{addr}/v1"), handle)
}

fn http(base_url: String) -> HttpTransport {
    HttpTransport::new(TransportConfig { base_url, model: "test-model".into(), api_key_env: "RELSKETCH_TEST_NO_KEY".into(), timeout_secs: 5, ..TransportConfig::default() })
}

#[test]
fn http_transport_speaks_chat_completions() {
    let body = r#"{"model":"test-model-2","choices":[{"message":{"role":"assistant","content":"no r"}}],"usage":{"prompt_tokens":7,"completion_tokens":2}}"#;
    let (url, server) = serve_once("200 OK", body);
    let mut t = http(url);
    let msgs = [Message::user("hello")];
    let reply = t.send(&ChatRequest { task: TaskKind::EnglishToAlloy, property: "DAG", messages: &msgs }).unwrap();
    assert_eq!(reply.text, "no r");
    assert_eq!(reply.model, "test-model-2");
    assert_eq!(reply.usage.unwrap().prompt, 7);
    let request = server.join().unwrap();
    assert!(request.starts_with("POST /v1/chat/completions"), "{request}");
    let body: serde_json::Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"], serde_json::json!([{"role": "user", "content": "hello"}]));
}

#[test]
fn http_transport_maps_errors() {
    let msgs = [Message::user("hello")];
    let req = ChatRequest { task: TaskKind::EnglishToAlloy, property: "DAG", messages: &msgs };
    let (url, server) = serve_once("401 Unauthorized", r#"{"error":"bad key"}"#);
    assert!(matches!(http(url).send(&req), Err(TransportError::Auth(_))));
    server.join().unwrap();
    let (url, server) = serve_once("500 Internal Server Error", "{}");
    assert!(matches!(http(url).send(&req), Err(TransportError::Status { status: 500, .. })));
    server.join().unwrap();
    let (url, server) = serve_once("200 OK", r#"{"choices":[]}"#);
    assert!(matches!(http(url).send(&req), Err(TransportError::Protocol(_))));
    server.join().unwrap();
    let dead = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    assert!(matches!(http(format!("http://{dead}")).send(&req), Err(TransportError::Connection(_))));
}
