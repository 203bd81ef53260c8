//! `ace`: parse, enrich, generate, index, shortlist, run agents and score them.
//!
//! Exit codes: 0 on success, 1 on usage or validation failure (including a
//! violated `--gate`), 2 on runtime errors such as I/O or transport failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use ace_core::agent::{oracle_agent, run_episode, GoldCall, Limits, Transcript};
use ace_core::catalog::{build_catalog, load_catalog, load_catalog_lenient, save_catalog, CatalogEntry};
use ace_core::chat::HttpChatClient;
use ace_core::enrich::{enrich_all, EnrichmentLevel, HeuristicEnricher, LlmEnricher};
use ace_core::eval::{check_gates, evaluate, render_report, shortlist_accuracy, Gate, ReportFormat, ReportSet};
use ace_core::jsonl::{read_jsonl, write_jsonl};
use ace_core::oas::{
    extract_endpoints, parse_document, render_issues_text, resolve_refs, validate_document, EndpointSpec,
    InputFormat,
};
use ace_core::shortlist::{build_index, shortlist, Embedder, HashingEmbedder, HttpEmbedder, ToolIndex};
use ace_core::toolgen::{generate_tools, write_atomic, write_tool_dir, GeneratorConfig, RenderTarget};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ace", version, about = "API tool catalog enrichment and evaluation")]
struct Cli {
    /// Skip corrupt catalog lines with a warning instead of aborting.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, resolve and validate an OAS document; write its endpoints.
    Parse(ParseArgs),
    /// Enrich endpoints and write the tool catalog.
    Enrich(EnrichArgs),
    /// Render tool sources and `catalog.json` from a tool catalog.
    Generate(GenerateArgs),
    /// Embed a tool catalog into a shortlist index.
    Index(IndexArgs),
    /// Print the top-k tools for a query.
    Shortlist(ShortlistArgs),
    /// Agent episodes.
    #[command(subcommand)]
    Agent(AgentCommand),
    /// Score transcripts or shortlists.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Merge saved reports and render them.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct ParseArgs {
    /// OAS 2.0 or 3.x document (JSON or YAML).
    spec: PathBuf,
    #[arg(long, default_value = "auto")]
    format: InputFormat,
    /// Fail on unresolvable or cyclic `$ref`s instead of degrading them.
    #[arg(long)]
    strict: bool,
    /// Where to write the extracted endpoints (JSON array).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Heuristic,
    Llm,
}

#[derive(Args, Debug)]
struct EnrichArgs {
    /// Endpoints from `ace parse`, or an OAS document.
    input: PathBuf,
    /// none|e1|e2|e3, or 0..3.
    #[arg(long)]
    level: EnrichmentLevel,
    #[arg(long, value_enum, default_value = "heuristic")]
    backend: Backend,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, short, default_value = "catalog.jsonl")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Tool catalog (`catalog.jsonl`).
    catalog: PathBuf,
    #[arg(long, default_value = "langchain-react-py")]
    target: RenderTarget,
    /// Generator config JSON (`base_url`, optional `auth`).
    #[arg(long, conflicts_with = "base_url")]
    config: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct EmbedderArgs {
    /// Remote embedding service; the hashing embedder is used when absent.
    #[arg(long, requires = "embedder_id")]
    embed_url: Option<String>,
    #[arg(long)]
    embedder_id: Option<String>,
}

impl EmbedderArgs {
    fn build(&self) -> Box<dyn Embedder> {
        match (&self.embed_url, &self.embedder_id) {
            (Some(url), Some(id)) => Box::new(HttpEmbedder::new(url, id)),
            _ => Box::new(HashingEmbedder),
        }
    }
}

#[derive(Args, Debug)]
struct IndexArgs {
    catalog: PathBuf,
    #[arg(long)]
    level: EnrichmentLevel,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[arg(long, short, default_value = "index.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ShortlistArgs {
    #[arg(long, default_value = "index.json")]
    index: PathBuf,
    #[arg(long, short)]
    query: String,
    #[arg(short, default_value_t = 5)]
    k: usize,
    #[command(flatten)]
    embedder: EmbedderArgs,
    /// Print JSON instead of tab-separated lines.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum AgentCommand {
    /// Run one episode per gold utterance and write transcripts.
    Run(AgentRunArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AgentKind {
    /// Chat model from ACE_LLM_BASE_URL / ACE_LLM_MODEL / ACE_LLM_API_KEY.
    Llm,
    /// Replays the gold calls.
    Oracle,
}

#[derive(Args, Debug)]
struct AgentRunArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// Gold calls (JSONL); only utterances are shown to the agent.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value = "llm")]
    agent: AgentKind,
    /// Load only the top-k tools from this index per utterance.
    #[arg(long, requires = "k")]
    index: Option<PathBuf>,
    #[arg(short)]
    k: Option<usize>,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[arg(long, default_value_t = Limits::default().max_steps)]
    max_steps: usize,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, short, default_value = "transcripts.jsonl")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// S, T, M and I for a transcript set.
    Selection(EvalSelectionArgs),
    /// Accuracy@k of an index against gold utterances.
    Shortlist(EvalShortlistArgs),
}

#[derive(Args, Debug)]
struct ReportOutput {
    /// Row label; defaults to the variant name.
    #[arg(long)]
    label: Option<String>,
    /// Also save the report set as JSON for `ace report`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    /// Thresholds such as `S>=0.9` or `top3>=0.8`.
    #[arg(long)]
    gate: Vec<Gate>,
}

#[derive(Args, Debug)]
struct EvalSelectionArgs {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[command(flatten)]
    output: ReportOutput,
}

#[derive(Args, Debug)]
struct EvalShortlistArgs {
    #[arg(long, default_value = "index.json")]
    index: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(short, value_delimiter = ',', default_value = "3,5,10,15,20")]
    k: Vec<usize>,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[command(flatten)]
    output: ReportOutput,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report sets written by `eval ... --out`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    #[arg(long)]
    gate: Vec<Gate>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    write_atomic(path, contents.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

static LENIENT: OnceLock<bool> = OnceLock::new();

fn load_entries(path: &Path) -> Result<Vec<CatalogEntry>, Failure> {
    let loaded = if LENIENT.get().copied().unwrap_or(false) {
        load_catalog_lenient(path).map(|(entries, skipped)| {
            for s in skipped {
                eprintln!("warning: {}: skipped {s}", path.display());
            }
            entries
        })
    } else {
        load_catalog(path)
    };
    loaded.map_err(|e| match e {
        ace_core::catalog::CatalogError::Io(e) => Failure::Runtime(format!("{}: {e}", path.display())),
        other => Failure::Validation(format!("{}: {other}", path.display())),
    })
}

/// Parses, resolves, validates and extracts; returns the usable endpoints
/// and whether any error-severity issue was found.
fn parse_spec(path: &Path, format: InputFormat, strict: bool) -> Result<(Vec<EndpointSpec>, bool), Failure> {
    let raw = read_file(path)?;
    let doc = parse_document(&raw, format).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let resolved = resolve_refs(&doc);
    let mut issues = resolved.issues.clone();
    let doc = if strict { resolved.strict().map_err(invalid)? } else { resolved.document };
    issues.extend(validate_document(&doc));
    let extraction = extract_endpoints(&doc);
    issues.extend(extraction.issues.iter().cloned());
    if !issues.is_empty() {
        eprint!("{}", render_issues_text(&issues));
    }
    let has_errors = issues.iter().any(|i| i.is_error());
    Ok((extraction.usable().into_iter().cloned().collect(), has_errors))
}

fn cmd_parse(a: ParseArgs) -> CmdResult {
    let (endpoints, has_errors) = parse_spec(&a.spec, a.format, a.strict)?;
    let json = serde_json::to_string_pretty(&endpoints).map_err(runtime)? + "\n";
    match &a.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    eprintln!("{} usable endpoints", endpoints.len());
    if has_errors {
        return Err(invalid("document has validation errors"));
    }
    Ok(())
}

fn load_endpoints(path: &Path) -> Result<Vec<EndpointSpec>, Failure> {
    let raw = read_file(path)?;
    if let Ok(endpoints) = serde_json::from_slice::<Vec<EndpointSpec>>(&raw) {
        return Ok(endpoints);
    }
    let (endpoints, has_errors) = parse_spec(path, InputFormat::Auto, false)?;
    if has_errors {
        eprintln!("warning: endpoints with validation errors were skipped");
    }
    Ok(endpoints)
}

fn cmd_enrich(a: EnrichArgs) -> CmdResult {
    let endpoints = load_endpoints(&a.input)?;
    let outcomes = match a.backend {
        Backend::Heuristic => enrich_all(&endpoints, a.level, &HeuristicEnricher, a.workers),
        Backend::Llm => {
            let client = HttpChatClient::from_env().map_err(invalid)?;
            enrich_all(&endpoints, a.level, &LlmEnricher::new(&client), a.workers)
        }
    }
    .map_err(runtime)?;
    let mut enriched = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        warn_all(&o.warnings);
        enriched.push(o.endpoint);
    }
    let (entries, warnings) = build_catalog(&enriched);
    warn_all(&warnings);
    save_catalog(&entries, &a.out).map_err(invalid)?;
    eprintln!("{} tools at {} -> {}", entries.len(), a.level.as_str(), a.out.display());
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let config = match (&a.config, &a.base_url) {
        (Some(path), _) => {
            let text = String::from_utf8(read_file(path)?).map_err(invalid)?;
            GeneratorConfig::from_json(&text).map_err(invalid)?
        }
        (None, Some(url)) => GeneratorConfig::new(url),
        (None, None) => return Err(invalid("one of --config or --base-url is required")),
    };
    let entries = load_entries(&a.catalog)?;
    let enriched: Vec<_> = entries.into_iter().map(|e| e.enriched).collect();
    let tools = generate_tools(&enriched, a.target, &config);
    warn_all(&tools.warnings);
    write_tool_dir(&a.out, &tools).map_err(runtime)?;
    eprintln!("{} tools -> {}", tools.artifacts.len(), a.out.display());
    Ok(())
}

fn cmd_index(a: IndexArgs) -> CmdResult {
    let entries = load_entries(&a.catalog)?;
    let index = build_index(&entries, a.level, a.embedder.build().as_ref()).map_err(runtime)?;
    write_file(&a.out, &index.to_json())?;
    eprintln!("{} tools indexed at {} -> {}", index.len(), a.level.as_str(), a.out.display());
    Ok(())
}

fn load_index(path: &Path) -> Result<ToolIndex, Failure> {
    let text = String::from_utf8(read_file(path)?).map_err(invalid)?;
    ToolIndex::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn cmd_shortlist(a: ShortlistArgs) -> CmdResult {
    let index = load_index(&a.index)?;
    let result = shortlist(&index, a.embedder.build().as_ref(), &a.query, a.k).map_err(invalid)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&result).map_err(runtime)?);
    } else {
        for (id, score) in &result.ranked {
            println!("{id}\t{score:.6}");
        }
    }
    Ok(())
}

fn cmd_agent_run(a: AgentRunArgs) -> CmdResult {
    if a.max_steps == 0 {
        return Err(invalid("--max-steps must be at least 1"));
    }
    let entries = load_entries(&a.catalog)?;
    if entries.is_empty() {
        return Err(invalid("the catalog has no tools"));
    }
    let gold: Vec<GoldCall> = read_jsonl(&a.gold).map_err(invalid)?;
    let limits = Limits { max_steps: a.max_steps };
    let transcripts: Vec<Transcript> = match a.agent {
        AgentKind::Oracle => gold.iter().map(oracle_agent).collect(),
        AgentKind::Llm => {
            let client = HttpChatClient::from_env().map_err(invalid)?;
            let shortlisted = match (&a.index, a.k) {
                (Some(path), Some(k)) => {
                    let index = load_index(path)?;
                    let embedder = a.embedder.build();
                    let mut per = Vec::with_capacity(gold.len());
                    for g in &gold {
                        let ids = shortlist(&index, embedder.as_ref(), &g.utterance, k).map_err(invalid)?;
                        per.push(entries.iter().filter(|e| ids.contains(&e.tool_id)).cloned().collect());
                    }
                    Some(per)
                }
                _ => None,
            };
            let pool = rayon_pool(a.workers)?;
            pool.install(|| {
                use rayon::prelude::*;
                gold.par_iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let tools: &[CatalogEntry] = shortlisted.as_ref().map_or(&entries, |s: &Vec<Vec<_>>| &s[i]);
                        run_episode(&g.utterance_id, &g.utterance, tools, &client, limits)
                    })
                    .collect()
            })
        }
    };
    write_jsonl(&a.out, &transcripts).map_err(runtime)?;
    eprintln!("{} transcripts -> {}", transcripts.len(), a.out.display());
    Ok(())
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(runtime)
}

fn emit_reports(set: &ReportSet, format: ReportFormat, out: Option<&Path>, gates: &[Gate]) -> CmdResult {
    print!("{}", render_report(set, format));
    if let Some(path) = out {
        write_file(path, &render_report(set, ReportFormat::Json))?;
    }
    let violations = check_gates(set, gates);
    for v in &violations {
        eprintln!("gate failed: {v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!("{} gate(s) violated", violations.len())))
    }
}

fn cmd_eval_selection(a: EvalSelectionArgs) -> CmdResult {
    let transcripts: Vec<Transcript> = read_jsonl(&a.transcripts).map_err(invalid)?;
    let gold: Vec<GoldCall> = read_jsonl(&a.gold).map_err(invalid)?;
    let entries = load_entries(&a.catalog)?;
    let label = a.output.label.clone().unwrap_or_else(|| {
        entries.first().map_or("run".to_string(), |e| e.level.label().to_string())
    });
    let report = evaluate(label, &transcripts, &gold, &entries).map_err(invalid)?;
    let set = ReportSet { metrics: vec![report], shortlists: vec![] };
    emit_reports(&set, a.output.format, a.output.out.as_deref(), &a.output.gate)
}

fn cmd_eval_shortlist(a: EvalShortlistArgs) -> CmdResult {
    let index = load_index(&a.index)?;
    let gold: Vec<GoldCall> = read_jsonl(&a.gold).map_err(invalid)?;
    let label = a.output.label.clone().unwrap_or_else(|| index.level.label().to_string());
    let report = shortlist_accuracy(label, &gold, &index, a.embedder.build().as_ref(), &a.k).map_err(invalid)?;
    let set = ReportSet { metrics: vec![], shortlists: vec![report] };
    emit_reports(&set, a.output.format, a.output.out.as_deref(), &a.output.gate)
}

fn cmd_report(a: ReportArgs) -> CmdResult {
    let mut set = ReportSet::default();
    for path in &a.reports {
        let part: ReportSet =
            serde_json::from_slice(&read_file(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        set.metrics.extend(part.metrics);
        set.shortlists.extend(part.shortlists);
    }
    let rendered = render_report(&set, a.format);
    if let Some(path) = &a.out {
        write_file(path, &rendered)?;
    }
    emit_reports(&set, a.format, None, &a.gate)
}

fn run(cli: Cli) -> CmdResult {
    let _ = LENIENT.set(cli.lenient);
    match cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Enrich(a) => cmd_enrich(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Index(a) => cmd_index(a),
        Command::Shortlist(a) => cmd_shortlist(a),
        Command::Agent(AgentCommand::Run(a)) => cmd_agent_run(a),
        Command::Eval(EvalCommand::Selection(a)) => cmd_eval_selection(a),
        Command::Eval(EvalCommand::Shortlist(a)) => cmd_eval_shortlist(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
