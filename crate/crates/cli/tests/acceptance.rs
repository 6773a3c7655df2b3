//! Acceptance suite. Runs each criterion in turn and prints one PASS/FAIL
//! line per criterion; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use relsketch::checker::{classify, find_instances, semantic_partition, CheckConfig, Verdict};
use relsketch::corpus::{builtin_corpus, find, CorpusEntry};
use relsketch::eval::{eval_expr, eval_formula, Env};
use relsketch::harness::{build_prompt, run_task, ReplayResponse, ReplayTransport, TaskKind};
use relsketch::parser::{parse_candidate, render};
use relsketch::pipeline::RunRecord;
use relsketch::relcore::{Expr, Formula, Instance, Quantifier, Schema, TupleSet};
use relsketch::sketch::solve_sketch;
use relsketch::testkit::{naive_instances, random_instance, FormulaGen, Oracle};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

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
    find(&builtin_corpus(), id).expect("builtin property").clone()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_trip(text: &str, schema: &Schema) -> Result<(), String> {
    let f = parse_candidate(text, schema).map_err(|e| format!("`{text}`: {e}"))?;
    let rendered = render(&f);
    let again = parse_candidate(&rendered, schema).map_err(|e| format!("`{rendered}`: {e}"))?;
    ensure(again == f, || format!("`{text}` renders as `{rendered}`, which parses differently"))
}

fn parser_corpus() -> Outcome {
    let entries = builtin_corpus();
    for e in &entries {
        round_trip(&render(&e.reference), &e.schema)?;
    }
    let node = Schema::single("Node", "link");
    for text in DAG_FORMULAS {
        round_trip(text, &node)?;
    }
    Ok(format!("{} reference + {} DAG formulas", entries.len(), DAG_FORMULAS.len()))
}

fn transcripts() -> Outcome {
    let irr = entry("Irreflexive");
    for answer in ["all s: S | s not in s.r", "all s: S | s->s not in r"] {
        let v = classify(&irr.reference, answer, &irr.schema, &CheckConfig::with_scope(3));
        ensure(v == Verdict::Correct, || format!("`{answer}`: {v:?}"))?;
    }
    Ok("both Correct".into())
}

fn dag_partition() -> Outcome {
    let dag = entry("DAG");
    let mut fs: Vec<Formula> = DAG_FORMULAS
        .iter()
        .map(|t| parse_candidate(t, &dag.schema).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    fs.push(dag.reference.clone());
    let classes = semantic_partition(&fs, &dag.schema, &CheckConfig::with_scope(3));
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    ensure(sizes == [12], || format!("class sizes {sizes:?}"))?;
    Ok("one class of 12".into())
}

fn cardinalities() -> Outcome {
    let (irr, dag) = (entry("Irreflexive"), entry("DAG"));
    let size = |e: &CorpusEntry, set: &str| e.sketch.set(set).map(|s| s.values.len()).unwrap_or(0);
    let got = [
        size(&irr, "e"),
        size(&irr, "o"),
        size(&dag, "co"),
        size(&dag, "e"),
        irr.sketch.raw_count(),
        dag.sketch.raw_count(),
    ];
    ensure(got == [9, 4, 4, 6, 324, 144], || format!("got {got:?}"))?;
    Ok("e=9, o=4, co=4, e=6, raw 324/144".into())
}

fn solvability() -> Outcome {
    let cfg = CheckConfig::with_scope(3);
    let mut counts = Vec::new();
    for e in builtin_corpus() {
        let sol = solve_sketch(&e.sketch, &e.reference, &e.schema, &cfg);
        ensure(!sol.correct.is_empty(), || format!("{} has no correct completion", e.id))?;
        let wanted = match e.id.as_str() {
            "Irreflexive" => Some("s != t"),
            "DAG" => Some("n !in n.^link"),
            _ => None,
        };
        if let Some(w) = wanted {
            ensure(sol.correct.iter().any(|c| c.text.contains(w)), || format!("{}: `{w}` not found", e.id))?;
        }
        counts.push(format!("{}={}", e.id, sol.correct.len()));
    }
    Ok(counts.join(" "))
}

fn differential() -> Outcome {
    let schemas = [
        Schema::single("S", "r"),
        Schema::single("Node", "link"),
        Schema::parse("sig A { f: one B } sig B { g: lone A, h: set B }").map_err(|e| e.to_string())?,
    ];
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut formulas, mut cases) = (0, 0);
    for scope in 1..=2 {
        for schema in &schemas {
            let naive = naive_instances(schema, scope);
            let main: Vec<Instance> = naive.iter().map(|n| n.to_instance(schema)).collect();
            let mut gen = FormulaGen::new(schema);
            for _ in 0..200 {
                let f = gen.formula(&mut rng, 4);
                for (n, inst) in naive.iter().zip(&main) {
                    let got = eval_formula(&f, inst, &Env::new()).map_err(|e| format!("`{f}`: {e}"))?;
                    ensure(got == Oracle::new(n).formula(&f), || format!("`{f}` disagrees on\n{inst}"))?;
                    cases += 1;
                }
                formulas += 1;
            }
        }
    }
    ensure(formulas >= 1000, || format!("only {formulas} formulas"))?;
    Ok(format!("{formulas} formulas, {cases} cases, 0 disagreements"))
}

fn sanity() -> Outcome {
    let cfg = CheckConfig::with_scope(3);
    let (f, fl) = (entry("Function"), entry("Functional"));
    let not_implied = Formula::not(Formula::implies(f.reference.clone(), fl.reference.clone()));
    ensure(find_instances(&not_implied, &f.schema, &cfg, 1).is_empty(), || "Function does not imply Functional".into())?;

    let (irr, refl) = (entry("Irreflexive"), entry("Reflexive"));
    let both = Formula::and(irr.reference.clone(), refl.reference.clone());
    let sat = find_instances(&both, &irr.schema, &cfg, usize::MAX);
    ensure(sat.iter().all(|i| i.universe().atom_count() == 0), || "Irreflexive and Reflexive on a non-empty universe".into())?;

    let mut rng = StdRng::seed_from_u64(99);
    let node = Schema::single("Node", "link");
    for _ in 0..300 {
        let inst = random_instance(&mut rng, &node, 3).to_instance(&node);
        let env = Env::new();
        let star = eval_expr(&Expr::refl_closure(Expr::field("link")), &inst, &env).map_err(|e| e.to_string())?;
        let plus = eval_expr(&Expr::closure(Expr::field("link")), &inst, &env).map_err(|e| e.to_string())?;
        let n = inst.universe().atom_count();
        let iden = TupleSet::from_tuples(2, n, inst.universe().atoms_of(0).map(|a| [a, a]));
        ensure(star.set_eq(&plus.union(&iden)), || format!("*link differs on\n{inst}"))?;
    }

    let s = Schema::single("S", "r");
    let mut gen = FormulaGen::new(&s);
    let holds = |f: &Formula, i: &Instance| eval_formula(f, i, &Env::new()).map_err(|e| e.to_string());
    for _ in 0..300 {
        let (a, b) = (gen.formula(&mut rng, 3), gen.formula(&mut rng, 3));
        let inst = random_instance(&mut rng, &s, 3).to_instance(&s);
        let lhs = Formula::not(Formula::and(a.clone(), b.clone()));
        let rhs = Formula::or(Formula::not(a.clone()), Formula::not(b.clone()));
        ensure(holds(&lhs, &inst)? == holds(&rhs, &inst)?, || format!("De Morgan fails for `{a}`, `{b}`"))?;
        let body = Formula::compare(Expr::var("q"), relsketch::relcore::CompareOp::In, Expr::join(Expr::var("q"), Expr::field("r")));
        let body = Formula::or(body, a.clone());
        let all = Formula::quant(Quantifier::All, &["q"], Expr::sig("S"), body.clone());
        let dual = Formula::not(Formula::quant(Quantifier::Some, &["q"], Expr::sig("S"), Formula::not(body)));
        ensure(holds(&all, &inst)? == holds(&dual, &inst)?, || format!("duality fails for `{a}`"))?;
    }
    Ok("0 violations".into())
}

fn retry_protocol() -> Outcome {
    let e = entry("Function");
    let mut outcomes = Vec::new();
    for _ in 0..2 {
        let mut t = ReplayTransport::new("replay", [])
            .with(TaskKind::SketchToAlloy, "Function", ReplayResponse::Text("pred Function {\n  all s: S | one s.r;\n}".into()))
            .with(TaskKind::SketchToAlloy, "Function", ReplayResponse::Text("pred Function {\n  all s: S | one s.r\n}".into()));
        let req = build_prompt(TaskKind::SketchToAlloy, &e, 20).map_err(|e| e.to_string())?;
        let out = run_task(&req, &mut t, &e.reference, &e.schema, &CheckConfig::with_scope(3), true)
            .map_err(|e| e.to_string())?;
        let verdicts: Vec<Verdict> = out.results().iter().map(|r| r.verdict.clone()).collect();
        ensure(verdicts == [Verdict::Correct], || format!("final verdicts {verdicts:?}"))?;
        ensure(out.retry_count() == 1, || format!("retry count {}", out.retry_count()))?;
        outcomes.push(format!("{:?}", out.exchanges.iter().map(|x| &x.messages).collect::<Vec<_>>()));
    }
    ensure(outcomes[0] == outcomes[1], || "runs differ".into())?;
    Ok("Correct after one retry, deterministic".into())
}

// Parses the numeric cells of every table row, keyed by (section, property).
fn table_rows(report: &str) -> BTreeMap<(String, String), Vec<String>> {
    let mut rows = BTreeMap::new();
    let mut section = String::new();
    for line in report.lines() {
        if let Some(title) = line.strip_prefix("## ") {
            section = title.to_string();
        } else if line.starts_with("| ") && !line.starts_with("| Property") {
            let cells: Vec<String> = line.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect();
            rows.insert((section.clone(), cells[0].clone()), cells[2..].to_vec());
        }
    }
    rows
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_relsketch");
    let replay = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay.jsonl");
    let run = |args: &[&str]| Command::new(bin).current_dir(dir.path()).args(args).output().map_err(|e| e.to_string());

    let ask = run(&["--replay", replay.to_str().unwrap(), "ask", "all", "all"])?;
    ensure(ask.status.success(), || format!("ask failed: {}", String::from_utf8_lossy(&ask.stderr)))?;
    let verify = run(&["report", "--verify"])?;
    let stderr = String::from_utf8_lossy(&verify.stderr).into_owned();
    ensure(verify.status.success(), || format!("verify failed: {stderr}"))?;
    ensure(stderr.contains(": 0 mismatches"), || stderr.clone())?;

    let runs = std::fs::read_to_string(dir.path().join("relsketch-out/runs.jsonl")).map_err(|e| e.to_string())?;
    let records: Vec<RunRecord> =
        runs.lines().map(|l| serde_json::from_str(l).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    ensure(records.len() == 33, || format!("{} run records", records.len()))?;

    let report = std::fs::read_to_string(dir.path().join("relsketch-out/report.md")).map_err(|e| e.to_string())?;
    let rows = table_rows(&report);
    ensure(rows.len() == 33, || format!("{} table rows", rows.len()))?;
    for r in &records {
        let cells = &rows[&(r.task.title().to_string(), r.property.clone())];
        let n = |i: usize| cells[i].parse::<usize>().map_err(|e| format!("{cells:?}: {e}"));
        let (counts, total) = if r.task == TaskKind::SketchToAlloy {
            ([n(2)?, n(3)?, n(4)?], r.candidates.len())
        } else {
            ([n(0)?, n(1)?, n(2)?], n(3)?)
        };
        let sum: usize = counts.iter().sum();
        ensure(sum == total && total == r.candidates.len(), || format!("{} [{}]: {cells:?}", r.property, r.task))?;
    }
    Ok(format!("33 runs, {}", stderr.trim()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("parser corpus round-trips", parser_corpus, Some(Duration::from_secs(1))),
        ("transcripts are Correct", transcripts, Some(Duration::from_secs(1))),
        ("DAG formulas form one class", dag_partition, Some(Duration::from_secs(10))),
        ("candidate-set cardinalities", cardinalities, None),
        ("every sketch is solvable", solvability, Some(Duration::from_secs(60))),
        ("differential evaluator", differential, None),
        ("semantic sanity suite", sanity, None),
        ("retry protocol", retry_protocol, None),
        ("end-to-end offline run", end_to_end, Some(Duration::from_secs(120))),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS {} {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
