use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use scenario_rag::corpus::{
    chunk_corpus, load_corpus, load_glossary, load_request, load_requirements, ChunkingPolicy, CorpusError,
};
use scenario_rag::embedding::{embedder_from_spec, EmbedderKind, EmbedderSpec, EmbeddingError};
use scenario_rag::generator::{
    generate_scenario_with, default_budget, BackendProfile, Endpoint, GenerationConfig, GenerationInputs,
    GeneratorError, SYSTEM_MESSAGE,
};
use scenario_rag::harness::{aggregate_survey, load_ratings, render_report, Deviation, GridConfig, HarnessError, ReportFormat};
use scenario_rag::metrics::{score_corpus, score_pairs, MetricParams, MetricReport};
use scenario_rag::prompt::{PromptError, PromptMode, PromptTemplate, DEFAULT_TEMPLATE, DEFAULT_TOKEN_LIMIT};
use scenario_rag::vector_index::{build_index, IndexError, VectorIndex};

#[derive(Parser)]
#[command(name = "scenario-rag", version, about = "Generate and evaluate test scenarios from requirements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or query a passage index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Generate one test scenario.
    Generate(GenerateArgs),
    /// Score outputs, run a configuration grid, or summarize a survey.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Print built-in prompt texts.
    #[command(subcommand)]
    Show(ShowCommand),
}

#[derive(Subcommand)]
enum IndexCommand {
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ChunkingPolicy::DEFAULT_MAX_TOKENS)]
        max_tokens: usize,
        #[arg(long, default_value_t = 0)]
        overlap: usize,
        /// Local embedding dimension.
        #[arg(long, default_value_t = EmbedderSpec::DEFAULT_LOCAL_DIMENSION)]
        dimension: usize,
    },
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        embed: EmbedArgs,
    },
}

#[derive(Args)]
struct EmbedArgs {
    /// Endpoint of the embedding service, for indices built with a remote embedder.
    #[arg(long)]
    embed_endpoint: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    reqs: PathBuf,
    #[arg(long)]
    request: PathBuf,
    #[arg(long)]
    glossary: Option<PathBuf>,
    #[arg(long)]
    mode: PromptMode,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    backend: String,
    /// `mock` or a chat-completions URL.
    #[arg(long, default_value = "mock")]
    endpoint: Endpoint,
    #[arg(long, default_value = "")]
    model: String,
    #[arg(long, default_value_t = DEFAULT_TOKEN_LIMIT)]
    token_limit: usize,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    template: Option<PathBuf>,
    /// Print the provenance record as JSON after the scenario.
    #[arg(long)]
    provenance: bool,
    #[command(flatten)]
    embed: EmbedArgs,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score candidate/reference file pairs listed in a two-column CSV.
    Score {
        #[arg(long)]
        pairs: PathBuf,
        /// Pooled corpus BLEU instead of the mean of sentence scores.
        #[arg(long)]
        pooled: bool,
        /// Add-epsilon smoothing for zero n-gram precisions.
        #[arg(long)]
        smoothing: Option<f64>,
    },
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Survey {
        #[arg(long)]
        ratings: PathBuf,
        /// Sample instead of population standard deviation.
        #[arg(long)]
        sample: bool,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Subcommand)]
enum ShowCommand {
    Template,
    SystemMessage,
}

#[derive(Debug, Clone, Copy)]
enum Failure {
    Validation = 2,
    Backend = 3,
    Budget = 4,
}

struct CliError {
    kind: Failure,
    message: String,
}

impl CliError {
    fn validation(message: impl ToString) -> Self {
        Self { kind: Failure::Validation, message: message.to_string() }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::validation(e)
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        let kind = match e {
            EmbeddingError::Backend { .. } => Failure::Backend,
            _ => Failure::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Embed { source, passage_id } => {
                let mut err = CliError::from(source);
                err.message = format!("embedding passage {passage_id:?}: {}", err.message);
                err
            }
            IndexError::Similarity(inner) => inner.into(),
            other => Self::validation(other),
        }
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::BudgetInfeasible { .. } => Self { kind: Failure::Budget, message: e.to_string() },
            PromptError::Embedding(inner) => inner.into(),
            other => Self::validation(other),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Index(inner) => inner.into(),
            GeneratorError::Embedding(inner) => inner.into(),
            GeneratorError::Prompt(inner) => inner.into(),
            GeneratorError::BudgetViolated { .. } => Self { kind: Failure::Budget, message: e.to_string() },
            GeneratorError::Backend(_) | GeneratorError::Parse { .. } => {
                Self { kind: Failure::Backend, message: e.to_string() }
            }
            other => Self::validation(other),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Corpus(inner) => inner.into(),
            HarnessError::Index(inner) => inner.into(),
            HarnessError::Embedding(inner) => inner.into(),
            HarnessError::Prompt(inner) => inner.into(),
            other => Self::validation(other),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Reconstructs the embedder an index was built with from its fingerprint.
fn spec_for(index: &VectorIndex, embed: &EmbedArgs) -> Result<EmbedderSpec, CliError> {
    let fingerprint = index.embedder_fingerprint();
    let mut parts = fingerprint.splitn(3, ':');
    let (kind, dimension, model) = match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(d), Some(m)) => (k, d, m),
        _ => return Err(CliError::validation(format!("unrecognized embedder fingerprint {fingerprint:?}"))),
    };
    let dimension: usize = dimension
        .parse()
        .map_err(|_| CliError::validation(format!("unrecognized embedder fingerprint {fingerprint:?}")))?;
    if kind == EmbedderKind::LocalDeterministic.as_str() {
        return Ok(EmbedderSpec::local(dimension));
    }
    match &embed.embed_endpoint {
        Some(endpoint) => Ok(EmbedderSpec::remote(endpoint, model, dimension)),
        None => Err(CliError::validation(format!(
            "index was built with embedder {fingerprint}; pass --embed-endpoint"
        ))),
    }
}

fn index_build(corpus: &Path, out: &Path, max_tokens: usize, overlap: usize, dimension: usize) -> Result<(), CliError> {
    let policy = ChunkingPolicy::new(max_tokens, overlap)?;
    let docs = load_corpus(corpus)?;
    let passages = chunk_corpus(&docs, &policy);
    let embedder = embedder_from_spec(&EmbedderSpec::local(dimension))?;
    let index = build_index(&passages, embedder.as_ref())?;
    index.persist(out)?;
    println!("indexed {} documents as {} passages into {}", docs.len(), index.len(), out.display());
    Ok(())
}

fn index_query(path: &Path, text: &str, k: usize, embed: &EmbedArgs) -> Result<(), CliError> {
    let index = VectorIndex::load(path)?;
    let spec = spec_for(&index, embed)?;
    let embedder = embedder_from_spec(&spec)?;
    let hits = index.query_top_k(&embedder.embed(text)?, k)?;
    for hit in hits {
        let preview: String = hit.text.chars().take(80).collect::<String>().replace('\n', " ");
        println!("{}\t{:.6}\t{}\t{}", hit.rank, hit.similarity, hit.passage_id, preview);
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let index = VectorIndex::load(&args.index)?;
    let spec = spec_for(&index, &args.embed)?;
    let embedder = embedder_from_spec(&spec)?;
    let reqs = load_requirements(&args.reqs)?;
    let request = load_request(&args.request)?;
    let glossary = match &args.glossary {
        Some(g) => load_glossary(g)?,
        None => Vec::new(),
    };
    let template = match &args.template {
        Some(t) => PromptTemplate::from_file(t)?,
        None => PromptTemplate::default(),
    };
    let profile = BackendProfile {
        backend_id: args.backend.clone(),
        endpoint: args.endpoint.clone(),
        model_name: if args.model.is_empty() && args.endpoint == Endpoint::Mock { "mock".into() } else { args.model.clone() },
        token_limit: args.token_limit,
    };
    profile.validate()?;
    let config = GenerationConfig::new(&args.backend, args.mode, args.k, args.token_limit)
        .with_budget(args.budget.unwrap_or_else(|| default_budget(args.token_limit)));
    let inputs = GenerationInputs { reqs: &reqs, request: &request, glossary: &glossary, index: &index };
    let backend = profile.connect();
    let scenario = generate_scenario_with(&template, &inputs, &config, embedder.as_ref(), backend.as_ref())?;
    info!(
        "prompt of {} tokens, {} context passages, {} requirements",
        scenario.provenance.prompt_tokens,
        scenario.provenance.included_k,
        scenario.provenance.included_req_ids.len()
    );
    println!("{}", scenario.render());
    if args.provenance {
        let json = serde_json::to_string_pretty(&scenario.provenance).map_err(CliError::validation)?;
        println!("{json}");
    }
    Ok(())
}

/// Rows of `candidate,reference` paths, relative to the pairs file. A
/// header row naming the columns is skipped.
fn read_pairs(path: &Path) -> Result<Vec<(String, String, String, String)>, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(CliError::validation(format!(
                "{}: row {}: expected 2 columns, found {}",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        if i == 0 && record[0].eq_ignore_ascii_case("candidate") && record[1].eq_ignore_ascii_case("reference") {
            continue;
        }
        let (cand, refr) = (record[0].to_owned(), record[1].to_owned());
        let cand_text = read_file(&base.join(&cand))?;
        let ref_text = read_file(&base.join(&refr))?;
        pairs.push((cand, refr, cand_text, ref_text));
    }
    if pairs.is_empty() {
        return Err(CliError::validation(format!("{}: no pairs listed", path.display())));
    }
    Ok(pairs)
}

fn score_row(label: &str, cand: &str, refr: &str, r: &MetricReport) -> Vec<String> {
    let mut row = vec![label.to_owned(), cand.to_owned(), refr.to_owned()];
    row.extend(r.scores().map(|v| v.to_string()));
    row.push(r.degenerate.to_string());
    row
}

fn eval_score(path: &Path, pooled: bool, smoothing: Option<f64>) -> Result<(), CliError> {
    let params = MetricParams { bleu_pooled: pooled, bleu_smoothing: smoothing, ..MetricParams::default() };
    params.validate().map_err(CliError::validation)?;
    let pairs = read_pairs(path)?;
    let texts: Vec<(&str, &str)> = pairs.iter().map(|(_, _, c, r)| (c.as_str(), r.as_str())).collect();
    let reports = score_pairs(&texts, &params);
    let corpus = score_corpus(&texts, &params).map_err(CliError::validation)?;

    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(std::io::stdout());
    let io = |e: csv::Error| CliError::validation(e);
    out.write_record(["row", "candidate", "reference", "bleu", "rouge", "meteor", "degenerate"]).map_err(io)?;
    for (i, ((cand, refr, _, _), report)) in pairs.iter().zip(&reports).enumerate() {
        out.write_record(score_row(&(i + 1).to_string(), cand, refr, report)).map_err(io)?;
    }
    out.write_record(score_row("corpus", "", "", &corpus)).map_err(io)?;
    out.flush().map_err(CliError::validation)?;
    Ok(())
}

fn eval_grid(config: &Path, out: &Path) -> Result<(), CliError> {
    let config = GridConfig::load(config)?;
    let result = config.run()?;
    fs::create_dir_all(out).map_err(|e| CliError::validation(format!("{}: {e}", out.display())))?;
    write_file(&out.join("grid.csv"), &render_report(&result, ReportFormat::Csv))?;
    write_file(&out.join("grid.txt"), &render_report(&result, ReportFormat::Text))?;
    write_file(&out.join("scenarios.csv"), &result.scenarios_csv())?;
    write_file(&out.join("provenance.jsonl"), &result.scenarios_jsonl())?;
    print!("{}", render_report(&result, ReportFormat::Text));
    let failed = result.cells.iter().filter(|c| c.report.is_none()).count();
    if failed == result.cells.len() {
        return Err(CliError { kind: Failure::Backend, message: "every grid cell failed or was skipped".into() });
    }
    if failed > 0 {
        eprintln!("{failed} of {} cells produced no scores; see grid.csv", result.cells.len());
    }
    Ok(())
}

fn eval_survey(path: &Path, sample: bool, csv: bool) -> Result<(), CliError> {
    let records = load_ratings(path)?;
    let deviation = if sample { Deviation::Sample } else { Deviation::Population };
    let summary = aggregate_survey(&records, deviation)?;
    let format = if csv { ReportFormat::Csv } else { ReportFormat::Text };
    print!("{}", render_report(&summary, format));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Index(IndexCommand::Build { corpus, out, max_tokens, overlap, dimension }) => {
            index_build(&corpus, &out, max_tokens, overlap, dimension)
        }
        Command::Index(IndexCommand::Query { index, text, k, embed }) => index_query(&index, &text, k, &embed),
        Command::Generate(args) => generate(&args),
        Command::Eval(EvalCommand::Score { pairs, pooled, smoothing }) => eval_score(&pairs, pooled, smoothing),
        Command::Eval(EvalCommand::Grid { config, out }) => eval_grid(&config, &out),
        Command::Eval(EvalCommand::Survey { ratings, sample, csv }) => eval_survey(&ratings, sample, csv),
        Command::Show(ShowCommand::Template) => {
            print!("{DEFAULT_TEMPLATE}");
            Ok(())
        }
        Command::Show(ShowCommand::SystemMessage) => {
            println!("{SYSTEM_MESSAGE}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Failure::Validation as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.kind as u8)
        }
    }
}
