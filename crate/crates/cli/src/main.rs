use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use treexp_cli::bench::{run_bench, BenchConfig, Manifest};
use treexp_cli::report::{run, RunConfig};
use treexp_cli::verify::{parse_claims, verify};
use treexp_core::asp::AspDocument;
use treexp_core::model::load_model_file;
use treexp_core::{ExplanationKind, Instance, Kind, Model, Query, DEFAULT_ORACLE_BOUND};

const EXIT_ERROR: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "treexp",
    version,
    about = "Formal explanations for decision trees, random forests and boosted trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one explanation, or all of them with --enumerate.
    Explain(ExplainArgs),
    /// Same as `explain --enumerate`.
    Enumerate(ExplainArgs),
    /// Check explanations against the exhaustive oracle.
    Verify(VerifyArgs),
    /// Write the answer-set program (facts and encoding) for a query.
    ExportAsp(ExportArgs),
    /// Run every row of a JSON manifest and summarize the results.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sufficient,
    Contrastive,
    Majority,
    TreeSpecific,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sufficient => Kind::Sufficient,
            KindArg::Contrastive => Kind::Contrastive,
            KindArg::Majority => Kind::Majority,
            KindArg::TreeSpecific => Kind::TreeSpecific,
        }
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct Inputs {
    /// Model IR JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Instance as a JSON array or a one-row CSV file.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    enumerate: bool,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
    /// Shuffle the literal order of greedy searches.
    #[arg(long)]
    seed: Option<u64>,
    /// Report elapsed_ms as 0 for reproducible output.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// An explanation JSON, a run report, or a bare array of literal ids.
    #[arg(long)]
    explanation: PathBuf,
    /// Kind of a bare literal array.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BOUND)]
    oracle_bound: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Emit only the instance facts, without the encoding.
    #[arg(long)]
    facts_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON array of rows.
    manifest: PathBuf,
    /// Worker threads (0 picks one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Timeout for rows that do not set their own.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: Output,
}

fn load_inputs(inputs: &Inputs) -> Result<(Model, Instance)> {
    let model = load_model_file(&inputs.model)?;
    let instance = Instance::load(&inputs.instance)?;
    instance.check_len(model.n_features())?;
    Ok((model, instance))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(format: Format, text: impl FnOnce() -> String, json: impl FnOnce() -> String) -> String {
    match format {
        Format::Text => text(),
        Format::Json => json() + "\n",
    }
}

fn explain(args: ExplainArgs, enumerate: bool) -> Result<u8> {
    let (model, instance) = load_inputs(&args.inputs)?;
    let config = RunConfig {
        kind: args.kind.into(),
        enumerate: enumerate || args.enumerate,
        timeout: Duration::from_millis(args.timeout_ms),
        seed: args.seed,
        timing: !args.no_timing,
    };
    let report = run(&model, &instance, &config)?;
    let text = render(args.output.format, || report.to_text(), || report.to_json());
    emit(args.output.out.as_deref(), &text)?;
    Ok(if report.timed_out { EXIT_TIMEOUT } else { 0 })
}

fn verify_cmd(args: VerifyArgs) -> Result<u8> {
    let (model, instance) = load_inputs(&args.inputs)?;
    let query = Query::new(&model, &instance)?;
    let text = std::fs::read_to_string(&args.explanation)
        .with_context(|| format!("cannot read {}", args.explanation.display()))?;
    let claims = parse_claims(&text, args.kind.map(Kind::from), &query)?;
    let report = verify(&query, claims, args.oracle_bound)?;
    let text = render(args.output.format, || report.to_text(), || report.to_json());
    emit(args.output.out.as_deref(), &text)?;
    Ok(0)
}

fn export(args: ExportArgs) -> Result<u8> {
    let (model, instance) = load_inputs(&args.inputs)?;
    let query = Query::new(&model, &instance)?;
    let kind = ExplanationKind::resolve(args.kind.into(), model.kind())?;
    let doc = AspDocument::new(&query, kind)?;
    let text = if args.facts_only { doc.facts } else { doc.program() };
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

fn bench(args: BenchArgs) -> Result<u8> {
    let manifest = Manifest::load(&args.manifest)?;
    let config = BenchConfig {
        timeout: Duration::from_millis(args.timeout_ms),
        seed: args.seed,
        timing: !args.no_timing,
        jobs: args.jobs,
    };
    let report = run_bench(&manifest, &config)?;
    let text = render(args.output.format, || report.to_text(), || report.to_json());
    emit(args.output.out.as_deref(), &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Explain(args) => explain(args, false),
        Command::Enumerate(args) => explain(args, true),
        Command::Verify(args) => verify_cmd(args),
        Command::ExportAsp(args) => export(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
