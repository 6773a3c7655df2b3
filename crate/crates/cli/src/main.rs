use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relsketch::checker::{check_equivalence, CheckConfig, Equivalence, Verdict};
use relsketch::corpus::{builtin_corpus, find, load_corpus, CorpusEntry};
use relsketch::harness::{
    AuditLog, CandidateRecord, HarnessError, HttpTransport, ReplayTransport, TaskKind, Transport, TransportConfig,
};
use relsketch::parser::parse_candidate;
use relsketch::pipeline::{
    ask, classify_batch, parse_candidates_file, reclassify_audit, reclassify_records, render_report, run_id, AskError,
    ReportRow, RunConfig, RunRecord,
};
use relsketch::relcore::Schema;
use relsketch::sketch::{parse_sketch, solve_sketch};

const RUNS_FILE: &str = "runs.jsonl";
const AUDIT_FILE: &str = "audit.jsonl";

/// Bounded equivalence checking, sketch solving and LLM evaluation for a
/// fragment of Alloy.
#[derive(Parser)]
#[command(name = "relsketch", version)]
struct Cli {
    /// Largest number of atoms per signature.
    #[arg(long, global = true, default_value_t = 3)]
    scope: usize,
    /// Corpus file to use instead of the built-in properties.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Directory for run records, the audit log and reports.
    #[arg(long, global = true, default_value = "relsketch-out")]
    out: PathBuf,
    /// Replay canned responses from this JSONL file instead of calling a model.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check two formulas for equivalence within scope.
    Check {
        reference: PathBuf,
        candidate: PathBuf,
        /// Signature declarations, inline or as a path.
        #[arg(long)]
        schema: Option<String>,
    },
    /// Classify a file of candidates against a corpus entry.
    Classify {
        property: String,
        candidates: PathBuf,
        /// Task kind recorded with the run.
        #[arg(long, default_value = "english-to-alloy")]
        task: TaskKind,
    },
    /// Sketch operations.
    Sketch {
        #[command(subcommand)]
        command: SketchCommand,
    },
    /// Prompt a model and classify its answers.
    Ask(AskArgs),
    /// Render run records as markdown tables.
    Report {
        /// Run record files; defaults to the one in the output directory.
        records: Vec<PathBuf>,
        /// Re-classify stored candidates and logged responses and report any
        /// verdict that changes.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Subcommand)]
enum SketchCommand {
    /// List every completion equivalent to the entry's reference.
    Solve {
        property: String,
        /// Solve this sketch file instead of the entry's own sketch.
        #[arg(long)]
        sketch: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AskArgs {
    /// Task kind, or `all`.
    task: String,
    /// Property id, or `all`.
    property: String,
    /// Number of distinct solutions to request.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// TOML file with a `[transport]` table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name; overrides the configuration file.
    #[arg(long)]
    model: Option<String>,
    /// Do not retry sketch answers that fail to parse.
    #[arg(long)]
    no_retry: bool,
}

/// Marks failures that should exit with status 3.
#[derive(Debug)]
struct TransportFailed(String);

impl fmt::Display for TransportFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for TransportFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<TransportFailed>().is_some() { 3 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = CheckConfig::with_scope(cli.scope);
    match &cli.command {
        Command::Check { reference, candidate, schema } => cmd_check(reference, candidate, schema.as_deref(), &cfg),
        Command::Classify { property, candidates, task } => cmd_classify(cli, property, candidates, *task, &cfg),
        Command::Sketch { command: SketchCommand::Solve { property, sketch } } => {
            cmd_solve(cli, property, sketch.as_deref(), &cfg)
        }
        Command::Ask(args) => cmd_ask(cli, args),
        Command::Report { records, verify } => cmd_report(cli, records, *verify),
    }
}

fn corpus(cli: &Cli) -> Result<Vec<CorpusEntry>> {
    match &cli.corpus {
        None => Ok(builtin_corpus()),
        Some(p) => Ok(load_corpus(p, &CheckConfig::with_scope(cli.scope))?),
    }
}

fn corpus_name(cli: &Cli) -> String {
    cli.corpus.as_ref().map_or_else(|| "builtin".to_string(), |p| p.display().to_string())
}

fn entry<'a>(entries: &'a [CorpusEntry], id: &str) -> Result<&'a CorpusEntry> {
    find(entries, id).with_context(|| {
        let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        format!("unknown property `{id}` (known: {})", ids.join(", "))
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Splits leading `sig ... { ... }` declarations off a formula file.
fn split_sigs(text: &str) -> (String, String) {
    let mut sigs = String::new();
    let mut rest = String::new();
    let mut depth = 0usize;
    let mut in_sig = false;
    for line in text.lines() {
        if !in_sig && line.trim_start().starts_with("sig ") {
            in_sig = true;
        }
        if in_sig {
            depth += line.matches('{').count();
            depth = depth.saturating_sub(line.matches('}').count());
            sigs.push_str(line);
            sigs.push('\n');
            if depth == 0 && line.contains('}') {
                in_sig = false;
            }
        } else {
            rest.push_str(line);
            rest.push('\n');
        }
    }
    (sigs, rest)
}

fn cmd_check(reference: &Path, candidate: &Path, schema: Option<&str>, cfg: &CheckConfig) -> Result<u8> {
    let (ref_sigs, ref_body) = split_sigs(&read(reference)?);
    let (_, cand_body) = split_sigs(&read(candidate)?);
    let schema = match schema {
        Some(s) => {
            let text = if Path::new(s).is_file() { read(Path::new(s))? } else { s.to_string() };
            Schema::parse(&text).context("invalid --schema")?
        }
        None if !ref_sigs.trim().is_empty() => Schema::parse(&ref_sigs).context("invalid signature declarations")?,
        None if ref_body.contains("Node") => Schema::single("Node", "link"),
        None => Schema::single("S", "r"),
    };
    let p = parse_candidate(&ref_body, &schema).with_context(|| format!("{}", reference.display()))?;
    let q = parse_candidate(&cand_body, &schema).with_context(|| format!("{}", candidate.display()))?;
    match check_equivalence(&p, &q, &schema, cfg) {
        Equivalence::Equivalent => {
            println!("Equivalent: no counterexample within scope {}", cfg.max_scope);
            Ok(0)
        }
        Equivalence::Counterexample { instance, p_value, q_value } => {
            println!("Counterexample (reference {p_value}, candidate {q_value}):");
            println!("{instance}");
            Ok(1)
        }
    }
}

fn append_jsonl(path: &Path, items: &[RunRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    for item in items {
        writeln!(f, "{}", serde_json::to_string(item)?)?;
    }
    Ok(())
}

fn print_row(task: TaskKind, row: &ReportRow) {
    println!(
        "{} [{}]: correct={} syntax_error={} wrong={} unique_syntactic={} semantic_classes={}",
        row.property,
        task,
        row.correct,
        row.syntax_error,
        row.wrong,
        row.unique_syntactic,
        row.semantic_classes
    );
}

fn cmd_classify(cli: &Cli, property: &str, candidates: &Path, task: TaskKind, cfg: &CheckConfig) -> Result<u8> {
    let entries = corpus(cli)?;
    let entry = entry(&entries, property)?;
    let list = parse_candidates_file(&read(candidates)?)
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("{}", candidates.display()))?;
    let (row, results) = classify_batch(entry, &list, cfg);
    for r in &results {
        let one_line = r.candidate.replace('\n', " ");
        match &r.verdict {
            Verdict::Correct => println!("Correct      {one_line}"),
            Verdict::SyntaxError(e) => println!("SyntaxError  {one_line}\n             {e}"),
            Verdict::Wrong(i) => {
                println!("Wrong        {one_line}");
                for line in i.to_string().lines() {
                    println!("             {line}");
                }
            }
        }
    }
    print_row(task, &row);
    let config = RunConfig {
        scope: cli.scope,
        model: "file".into(),
        solution_count: list.len(),
        retry: false,
        corpus: corpus_name(cli),
    };
    let source = candidates.display().to_string();
    let record = RunRecord {
        run_id: run_id(&["classify", &entry.id, &source, &cli.scope.to_string()]),
        config,
        task,
        property: entry.id.clone(),
        model: "file".into(),
        retry_count: 0,
        candidates: results.iter().map(CandidateRecord::from).collect(),
        row,
    };
    append_jsonl(&cli.out.join(RUNS_FILE), &[record])?;
    Ok(0)
}

fn cmd_solve(cli: &Cli, property: &str, sketch_path: Option<&Path>, cfg: &CheckConfig) -> Result<u8> {
    let entries = corpus(cli)?;
    let entry = entry(&entries, property)?;
    let sketch = match sketch_path {
        Some(p) => parse_sketch(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => entry.sketch.clone(),
    };
    let sol = solve_sketch(&sketch, &entry.reference, &entry.schema, cfg);
    println!("{}: raw={} skipped={} correct={}", entry.id, sol.raw, sol.skipped, sol.correct.len());
    for c in &sol.correct {
        let mut lines = c.text.lines().filter(|l| !l.trim().is_empty());
        if let Some(first) = lines.next() {
            println!("  {}", first.trim());
        }
        for l in lines {
            println!("    {}", l.trim());
        }
    }
    Ok(if sol.correct.is_empty() { 1 } else { 0 })
}

fn transport(cli: &Cli, args: &AskArgs) -> Result<Box<dyn Transport>> {
    if let Some(path) = &cli.replay {
        let model = args.model.clone().unwrap_or_else(|| "replay".into());
        return Ok(Box::new(ReplayTransport::from_file(model, path)?));
    }
    let mut cfg = match &args.config {
        Some(p) => TransportConfig::from_toml(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => TransportConfig::default(),
    };
    if let Some(m) = &args.model {
        cfg.model = m.clone();
    }
    Ok(Box::new(HttpTransport::new(cfg)))
}

fn cmd_ask(cli: &Cli, args: &AskArgs) -> Result<u8> {
    let entries = corpus(cli)?;
    let tasks: Vec<TaskKind> = if args.task.eq_ignore_ascii_case("all") {
        TaskKind::ALL.to_vec()
    } else {
        vec![args.task.parse().map_err(anyhow::Error::msg)?]
    };
    let properties: Vec<String> = if args.property.eq_ignore_ascii_case("all") {
        entries.iter().map(|e| e.id.clone()).collect()
    } else {
        vec![entry(&entries, &args.property)?.id.clone()]
    };
    let mut transport = transport(cli, args)?;
    let run = RunConfig {
        scope: cli.scope,
        model: transport.model().to_string(),
        solution_count: args.count,
        retry: !args.no_retry,
        corpus: corpus_name(cli),
    };
    let task_names: Vec<&str> = tasks.iter().map(|t| t.name()).collect();
    let id = run_id(&[
        "ask",
        &run.model,
        &run.corpus,
        &run.scope.to_string(),
        &run.solution_count.to_string(),
        &run.retry.to_string(),
        &task_names.join(","),
        &properties.join(","),
    ]);
    fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display()))?;
    let audit = AuditLog::open(&cli.out.join(AUDIT_FILE)).context("cannot open audit log")?;
    let mut failures = Vec::new();
    for &task in &tasks {
        for property in &properties {
            match ask(&entries, property, task, transport.as_mut(), &run, &id, Some(&audit)) {
                Ok(record) => {
                    print_row(task, &record.row);
                    if task == TaskKind::SketchToAlloy {
                        println!("  solved={} attempts={}", record.solved(), record.retry_count + 1);
                    }
                    append_jsonl(&cli.out.join(RUNS_FILE), &[record])?;
                }
                Err(AskError::Harness(e @ HarnessError::Transport { .. })) => {
                    eprintln!("{property} [{task}]: {e}");
                    failures.push(format!("{property} [{task}]"));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if !failures.is_empty() {
        return Err(TransportFailed(format!("transport failed for {}", failures.join(", "))).into());
    }
    Ok(0)
}

fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn cmd_report(cli: &Cli, paths: &[PathBuf], verify: bool) -> Result<u8> {
    let default = [cli.out.join(RUNS_FILE)];
    let paths = if paths.is_empty() { &default[..] } else { paths };
    let mut records = Vec::new();
    for p in paths {
        if !p.exists() && paths == default {
            bail!("no run records at {}; run `ask` or `classify` first", p.display());
        }
        records.extend(read_records(p)?);
    }
    let report = render_report(&records);
    print!("{report}");
    fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display()))?;
    fs::write(cli.out.join("report.md"), &report)?;
    if !verify {
        return Ok(0);
    }
    let entries = corpus(cli)?;
    let mut mismatches = reclassify_records(&records, &entries);
    let audit_path = cli.out.join(AUDIT_FILE);
    let audited = if audit_path.exists() {
        let log = AuditLog::read(&audit_path).context("cannot read audit log")?;
        mismatches.extend(reclassify_audit(&log, &entries));
        log.len()
    } else {
        0
    };
    for m in &mismatches {
        eprintln!("mismatch: {} [{}] `{}`: stored {:?}, now {:?}", m.property, m.task, m.candidate, m.stored, m.recomputed);
    }
    eprintln!(
        "verified {} run records and {audited} audit records: {} mismatches",
        records.len(),
        mismatches.len()
    );
    Ok(if mismatches.is_empty() { 0 } else { 1 })
}
