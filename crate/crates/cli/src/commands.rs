//! The select, prompt, run and score subcommands.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use syntaxicl::gecscore::{parse_m2, score_corpus};
use syntaxicl::llmclient::{run_batch, Client, EndpointConfig, Job, TEMPERATURE};
use syntaxicl::pipeline::{precompute_polynomials, read_jsonl, write_jsonl};
use syntaxicl::prompt::{prompt_for_selection, Prompt, PromptStyle};
use syntaxicl::treebank::Corpus;
use syntaxicl::treepoly::{cache, PolyError, Polynomial};
use syntaxicl::{SelectionConfig, SelectionResult, Selector};

use crate::bundle::load_pair;
use crate::manifest::{create_dir, hash_file, Manifest};

pub const SELECTIONS: &str = "selections.jsonl";
pub const JOURNAL: &str = "journal.jsonl";
pub const HYPOTHESES: &str = "hypotheses.txt";
pub const REPORT: &str = "report.json";

/// Some queries still failed against the endpoint after retries.
#[derive(Debug)]
pub struct EndpointFailure {
    pub failed: usize,
    pub total: usize,
    pub first: String,
}

impl fmt::Display for EndpointFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} of {} queries failed; first error: {}", self.failed, self.total, self.first)
    }
}

impl std::error::Error for EndpointFailure {}

fn polynomials(train: &Corpus, budget: usize, cache_path: Option<&Path>) -> Result<Vec<Result<Polynomial, PolyError>>> {
    // the budget is part of the key: overflow entries depend on it
    let key = format!("{}-b{budget}", train.content_hash());
    let vocab = train.vocab.fingerprint();
    let d = train.vocab.len();
    if let Some(path) = cache_path.filter(|p| p.exists()) {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        match cache::read(&text, &key, &vocab, d, budget) {
            Some(p) if p.len() == train.len() => {
                log::info!("polynomials loaded from {}", path.display());
                return Ok(p);
            }
            _ => log::warn!("polynomial cache {} is stale; rebuilding", path.display()),
        }
    }
    let polys = precompute_polynomials(train, budget);
    if let Some(path) = cache_path {
        fs::write(path, cache::write(&key, &vocab, d, &polys)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(polys)
}

#[derive(Serialize)]
struct SelectManifestConfig<'a> {
    selection: &'a SelectionConfig,
    train_bundle: &'a Path,
    test_bundle: &'a Path,
    jobs: usize,
}

pub fn select(
    train_dir: &Path,
    test_dir: &Path,
    config: SelectionConfig,
    jobs: usize,
    poly_cache: Option<&Path>,
    out: &Path,
) -> Result<()> {
    config.validate()?;
    let (train, test) = load_pair(train_dir, test_dir)?;
    let polys = if config.stage2.uses_polynomials() {
        Some(polynomials(&train, config.term_budget, poly_cache)?)
    } else {
        None
    };
    let selector = Selector::with_polynomials(&train, config.clone(), polys)?;
    let results = selector.select_batch(&test.examples, jobs)?;
    let fallbacks: usize = results.iter().map(|r| r.fallbacks.len()).sum();
    if fallbacks > 0 {
        log::warn!("{fallbacks} polynomial budget fallbacks to the tree kernel");
    }

    create_dir(out)?;
    let path = out.join(SELECTIONS);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_jsonl(&results, &mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
    let mut m = Manifest::new(
        "select",
        SelectManifestConfig {
            selection: &config,
            train_bundle: train_dir,
            test_bundle: test_dir,
            jobs,
        },
    )?;
    m.input("train_corpus", train.content_hash())
        .input("test_corpus", test.content_hash())
        .input("label_vocab", train.vocab.fingerprint());
    m.write(out, &[SELECTIONS.to_owned()])?;
    log::info!("{} selections written to {}", results.len(), path.display());
    Ok(())
}

/// Accepts either a selection directory or the JSONL file itself.
pub fn selections_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(SELECTIONS)
    } else {
        path.to_owned()
    }
}

fn read_selections(path: &Path) -> Result<Vec<SelectionResult>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

struct Built {
    jobs: Vec<Job>,
    train: Corpus,
    test: Corpus,
    selections: PathBuf,
}

fn build_prompts(selections: &Path, train_dir: &Path, test_dir: &Path, style: PromptStyle, most_similar_last: bool) -> Result<Built> {
    let selections = selections_file(selections);
    let sels = read_selections(&selections)?;
    let (train, test) = load_pair(train_dir, test_dir)?;
    let mut jobs = Vec::with_capacity(sels.len());
    for sel in &sels {
        let Some(q) = test.examples.get(sel.query_id) else {
            bail!("selection for query {} but the test bundle has {} examples", sel.query_id, test.len());
        };
        jobs.push(Job {
            query_id: sel.query_id,
            prompt: prompt_for_selection(style, sel, &train, &q.source, most_similar_last)?,
            test_source: q.source.clone(),
        });
    }
    Ok(Built {
        jobs,
        train,
        test,
        selections,
    })
}

#[derive(Serialize)]
struct PromptManifestConfig<'a> {
    style: PromptStyle,
    most_similar_last: bool,
    selections: &'a Path,
    train_bundle: &'a Path,
    test_bundle: &'a Path,
}

pub fn prompt_file_name(query_id: usize, prompt: &Prompt) -> String {
    format!("prompt_{query_id:05}.{}", prompt.file_extension())
}

pub fn prompt(
    selections: &Path,
    train_dir: &Path,
    test_dir: &Path,
    style: PromptStyle,
    most_similar_last: bool,
    out: &Path,
) -> Result<()> {
    let b = build_prompts(selections, train_dir, test_dir, style, most_similar_last)?;
    create_dir(out)?;
    let mut names = Vec::with_capacity(b.jobs.len());
    for job in &b.jobs {
        let name = prompt_file_name(job.query_id, &job.prompt);
        let path = out.join(&name);
        fs::write(&path, job.prompt.render()).with_context(|| format!("writing {}", path.display()))?;
        names.push(name);
    }
    let mut m = Manifest::new(
        "prompt",
        PromptManifestConfig {
            style,
            most_similar_last,
            selections: &b.selections,
            train_bundle: train_dir,
            test_bundle: test_dir,
        },
    )?;
    m.input_file("selections", &b.selections)?
        .input("train_corpus", b.train.content_hash())
        .input("test_corpus", b.test.content_hash());
    m.write(out, &names)?;
    log::info!("{} prompts written to {}", names.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct RunManifestConfig<'a> {
    style: PromptStyle,
    most_similar_last: bool,
    base_url: &'a str,
    model: &'a str,
    api_key_env: &'a str,
    temperature: f64,
    timeout_secs: f64,
    max_retries: u32,
    backoff_base_ms: u128,
    max_in_flight: usize,
    selections: &'a Path,
}

pub fn run(
    selections: &Path,
    train_dir: &Path,
    test_dir: &Path,
    style: PromptStyle,
    most_similar_last: bool,
    endpoint: EndpointConfig,
    out: &Path,
) -> Result<()> {
    let b = build_prompts(selections, train_dir, test_dir, style, most_similar_last)?;
    create_dir(out)?;
    let journal = out.join(JOURNAL);
    let client = Client::new(endpoint.clone());
    let records = run_batch(&client, &b.jobs, &journal)?;

    let mut hyp = String::new();
    for (job, r) in b.jobs.iter().zip(&records) {
        hyp.push_str(r.correction.as_deref().unwrap_or(&job.test_source));
        hyp.push('\n');
    }
    let hyp_path = out.join(HYPOTHESES);
    fs::write(&hyp_path, hyp).with_context(|| format!("writing {}", hyp_path.display()))?;
    let mut m = Manifest::new(
        "run",
        RunManifestConfig {
            style,
            most_similar_last,
            base_url: &endpoint.base_url,
            model: &endpoint.model,
            api_key_env: &endpoint.api_key_env,
            temperature: TEMPERATURE,
            timeout_secs: endpoint.timeout.as_secs_f64(),
            max_retries: endpoint.max_retries,
            backoff_base_ms: endpoint.backoff_base.as_millis(),
            max_in_flight: endpoint.max_in_flight,
            selections: &b.selections,
        },
    )?;
    m.input_file("selections", &b.selections)?
        .input("train_corpus", b.train.content_hash())
        .input("test_corpus", b.test.content_hash());
    m.write(out, &[JOURNAL.to_owned(), HYPOTHESES.to_owned()])?;

    let failed: Vec<_> = records.iter().filter(|r| !r.is_success()).collect();
    if let Some(first) = failed.first() {
        return Err(EndpointFailure {
            failed: failed.len(),
            total: records.len(),
            first: format!("query {}: {}", first.query_id, first.error.as_deref().unwrap_or("no correction")),
        }
        .into());
    }
    log::info!("{} hypotheses written to {}", records.len(), hyp_path.display());
    Ok(())
}

/// Endpoint settings from flag values.
pub fn endpoint_config(
    base_url: &str,
    model: &str,
    api_key_env: &str,
    timeout_secs: f64,
    max_retries: u32,
    backoff_ms: u64,
    jobs: usize,
) -> Result<EndpointConfig> {
    if !(timeout_secs.is_finite() && timeout_secs > 0.0) {
        bail!("--timeout-secs must be positive, got {timeout_secs}");
    }
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    Ok(EndpointConfig {
        api_key_env: api_key_env.to_owned(),
        timeout: Duration::from_secs_f64(timeout_secs),
        max_retries,
        backoff_base: Duration::from_millis(backoff_ms),
        max_in_flight: jobs,
        ..EndpointConfig::new(base_url, model)
    })
}

pub fn score(hyp: &Path, m2: &Path, out: Option<&Path>) -> Result<String> {
    let hyp_text = fs::read_to_string(hyp).with_context(|| format!("reading {}", hyp.display()))?;
    let m2_text = fs::read_to_string(m2).with_context(|| format!("reading {}", m2.display()))?;
    let golds = parse_m2(&m2_text).with_context(|| format!("parsing {}", m2.display()))?;
    let hyps: Vec<&str> = hyp_text.lines().collect();
    let report = score_corpus(&hyps, &golds)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join(REPORT);
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        let mut m = Manifest::new("score", serde_json::json!({ "hyp": hyp, "m2": m2 }))?;
        m.input("hyp", hash_file(hyp)?).input("m2", hash_file(m2)?);
        m.write(dir, &[REPORT.to_owned()])?;
    }
    Ok(report.to_string())
}
