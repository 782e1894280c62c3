//! `syntaxicl`: ingest corpora, select in-context examples, render prompts,
//! run them against a chat-completions endpoint, score and benchmark.
//!
//! Exit codes: 0 success, 1 validation or configuration error, 2 I/O error,
//! 3 remote endpoint failure.

mod bench;
mod bundle;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use syntaxicl::llmclient::{ClientError, DEFAULT_API_KEY_ENV, DEFAULT_IN_FLIGHT};
use syntaxicl::pipeline::{Bm25ParamsConfig, DEFAULT_CANDIDATES, DEFAULT_SHOTS};
use syntaxicl::treebank::TreebankError;
use syntaxicl::treepoly::{DEFAULT_ERROR_WEIGHT, DEFAULT_TERM_BUDGET};
use syntaxicl::{PromptStyle, SelectionConfig, Stage1, Stage2};

#[derive(Parser)]
#[command(name = "syntaxicl", version, about = "Syntax-aware in-context example selection for grammatical error correction")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a parallel corpus with its dependency trees and write a bundle
    Ingest(IngestArgs),
    /// Select in-context examples for every test sentence
    Select(SelectArgs),
    /// Render prompts from a selection without calling any endpoint
    Prompt(PromptArgs),
    /// Send prompts to a chat-completions endpoint and collect corrections
    Run(RunArgs),
    /// Score hypotheses against M2 gold edits (P, R, F0.5)
    Score(ScoreArgs),
    /// Time selection per query, stage by stage, on one thread
    Bench(BenchArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Erroneous source sentences, one per line, whitespace-tokenized
    #[arg(long)]
    src: PathBuf,
    /// Corrected target sentences, aligned with --src
    #[arg(long)]
    tgt: PathBuf,
    /// CoNLL-U (or 4-column ID FORM HEAD DEPREL) parses of the sources
    #[arg(long)]
    trees: PathBuf,
    /// Optional sentence vectors, one space-separated row per sentence
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output bundle directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectionFlags {
    /// Stage I retriever: none, bm25 or dense
    #[arg(long, default_value_t = Stage1::Bm25)]
    stage1: Stage1,
    /// Stage II ranker: none, tk (tree kernel), poly, wpoly (error-weighted poly) or random
    #[arg(long, default_value_t = Stage2::TreeKernel)]
    stage2: Stage2,
    /// Stage I candidate pool size
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    candidates: usize,
    /// Examples per prompt
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: usize,
    /// Seed for the random ranker
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight of the S/R/M error-label variables under wpoly
    #[arg(long, default_value_t = DEFAULT_ERROR_WEIGHT)]
    error_weight: f64,
    /// Term cap per tree polynomial; larger trees fall back to the tree kernel
    #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
    term_budget: usize,
    /// BM25 term-frequency saturation
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    /// BM25 length normalization
    #[arg(long, default_value_t = 0.75)]
    b: f64,
}

impl SelectionFlags {
    fn config(&self) -> SelectionConfig {
        SelectionConfig {
            stage1: self.stage1,
            stage2: self.stage2,
            candidate_size: self.candidates,
            shots: self.shots,
            random_seed: self.seed,
            error_weight: self.error_weight,
            term_budget: self.term_budget,
            bm25: Bm25ParamsConfig { k1: self.k1, b: self.b },
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Training (example pool) bundle directory
    #[arg(long)]
    train_bundle: PathBuf,
    /// Test (query) bundle directory
    #[arg(long)]
    test_bundle: PathBuf,
    #[command(flatten)]
    selection: SelectionFlags,
    /// Worker threads (0 = all cores); output does not depend on it
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Polynomial cache file, reused when it matches the training bundle
    #[arg(long)]
    poly_cache: Option<PathBuf>,
    /// Output directory (selections.jsonl and manifest.json)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PromptFlags {
    /// Selection directory or selections.jsonl file
    #[arg(long)]
    selections: PathBuf,
    /// Training bundle the selection was made from
    #[arg(long)]
    train_bundle: PathBuf,
    /// Test bundle holding the query sentences
    #[arg(long)]
    test_bundle: PathBuf,
    /// Prompt format: completion or chat
    #[arg(long, default_value_t = PromptStyle::Chat)]
    style: PromptStyle,
    /// List the most similar example last instead of first
    #[arg(long)]
    most_similar_last: bool,
}

#[derive(Args)]
struct PromptArgs {
    #[command(flatten)]
    prompt: PromptFlags,
    /// Output directory (one prompt_NNNNN file per query and manifest.json)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    prompt: PromptFlags,
    /// Endpoint base URL; /chat/completions is appended
    #[arg(long)]
    base_url: String,
    /// Model name sent with every request (temperature is always 0)
    #[arg(long)]
    model: String,
    /// Environment variable holding the API key (unset: no Authorization header)
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    /// Per-request timeout in seconds
    #[arg(long, default_value_t = 60.0)]
    timeout_secs: f64,
    /// Retries on HTTP 408/429/5xx and transport errors
    #[arg(long, default_value_t = 5)]
    max_retries: u32,
    /// First retry delay in milliseconds, doubled on each further retry
    #[arg(long, default_value_t = 500)]
    backoff_ms: u64,
    /// Requests in flight at once
    #[arg(long, default_value_t = DEFAULT_IN_FLIGHT)]
    jobs: usize,
    /// Output directory (journal.jsonl, hypotheses.txt, manifest.json);
    /// rerunning into the same directory resumes from the journal
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Hypotheses, one corrected sentence per line
    #[arg(long)]
    hyp: PathBuf,
    /// M2 gold file aligned with --hyp
    #[arg(long)]
    m2: PathBuf,
    /// Optional output directory for report.json and manifest.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark on a synthetic training corpus of N examples
    #[arg(long, conflicts_with_all = ["train_bundle", "test_bundle"])]
    synthetic: Option<usize>,
    /// Training bundle (with --test-bundle instead of --synthetic)
    #[arg(long, requires = "test_bundle")]
    train_bundle: Option<PathBuf>,
    /// Test bundle
    #[arg(long, requires = "train_bundle")]
    test_bundle: Option<PathBuf>,
    /// Number of timed queries
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Seed of the synthetic corpora
    #[arg(long, default_value_t = 0)]
    synth_seed: u64,
    /// Comma-separated stage1:stage2 pairs to time
    #[arg(long, default_value = "bm25:none,bm25:tk")]
    configs: String,
    #[command(flatten)]
    selection: SelectionFlags,
    /// Optional output directory for bench.json and manifest.json
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => {
            let c = bundle::ingest(&a.src, &a.tgt, &a.trees, a.embeddings.as_deref(), &a.out)?;
            log::info!("{} examples, {} labels written to {}", c.len(), c.vocab.len(), a.out.display());
        }
        Command::Select(a) => commands::select(
            &a.train_bundle,
            &a.test_bundle,
            a.selection.config(),
            a.jobs,
            a.poly_cache.as_deref(),
            &a.out,
        )?,
        Command::Prompt(a) => {
            let p = &a.prompt;
            commands::prompt(&p.selections, &p.train_bundle, &p.test_bundle, p.style, p.most_similar_last, &a.out)?
        }
        Command::Run(a) => {
            let endpoint = commands::endpoint_config(
                &a.base_url,
                &a.model,
                &a.api_key_env,
                a.timeout_secs,
                a.max_retries,
                a.backoff_ms,
                a.jobs,
            )?;
            let p = &a.prompt;
            commands::run(&p.selections, &p.train_bundle, &p.test_bundle, p.style, p.most_similar_last, endpoint, &a.out)?
        }
        Command::Score(a) => println!("{}", commands::score(&a.hyp, &a.m2, a.out.as_deref())?),
        Command::Bench(a) => {
            bench::bench(bench::BenchArgs {
                synthetic: a.synthetic,
                train_bundle: a.train_bundle.as_deref(),
                test_bundle: a.test_bundle.as_deref(),
                queries: a.queries,
                seed: a.synth_seed,
                configs: &a.configs,
                base: a.selection.config(),
                out: a.out.as_deref(),
            })?;
        }
    }
    Ok(())
}

/// Maps the first classifiable cause to an exit code.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<TreebankError>() {
            return if matches!(e, TreebankError::Io { .. }) { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<ClientError>() {
            return if matches!(e, ClientError::Journal { .. }) { 2 } else { 3 };
        }
        if cause.is::<commands::EndpointFailure>() {
            return 3;
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
