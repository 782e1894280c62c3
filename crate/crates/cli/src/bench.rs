//! Per-query selection timings, stage by stage, on one thread.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use syntaxicl::pipeline::precompute_polynomials;
use syntaxicl::synth::{generate, SynthConfig};
use syntaxicl::treebank::{Corpus, LabelVocab};
use syntaxicl::{SelectionConfig, Selector, Stage1, Stage2};

use crate::bundle::load_pair;
use crate::manifest::{create_dir, Manifest};

pub const BENCH_FILE: &str = "bench.json";

#[derive(Debug, Clone, Serialize)]
pub struct StageTimings {
    pub stage1: Stage1,
    pub stage2: Stage2,
    pub queries: usize,
    /// Index and polynomial construction, seconds.
    pub setup_secs: f64,
    pub stage1_median_secs: f64,
    pub stage2_median_secs: f64,
    pub total_median_secs: f64,
    pub total_mean_secs: f64,
    pub total_secs: f64,
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Synthetic training corpus of `n` examples and `queries` test queries
/// drawn from a different seed, over a shared vocabulary.
pub fn synthetic_pair(n: usize, queries: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    let train = generate(&SynthConfig { n, seed, ..SynthConfig::default() });
    let test = generate(&SynthConfig {
        n: queries,
        seed: seed.wrapping_add(1),
        ..SynthConfig::default()
    });
    let mut train = train.into_corpus(LabelVocab::new())?;
    let test = test.into_corpus(train.vocab.clone())?;
    train.adopt_vocab(&test.vocab);
    Ok((train, test))
}

/// Times setup, stage I alone and the full selection for every query.
pub fn time_config(train: &Corpus, test: &Corpus, config: SelectionConfig) -> Result<StageTimings> {
    let start = Instant::now();
    let polys = config
        .stage2
        .uses_polynomials()
        .then(|| precompute_polynomials(train, config.term_budget));
    let selector = Selector::with_polynomials(train, config.clone(), polys)?;
    let setup_secs = start.elapsed().as_secs_f64();

    let mut s1 = Vec::with_capacity(test.len());
    let mut s2 = Vec::with_capacity(test.len());
    let mut total = Vec::with_capacity(test.len());
    for q in &test.examples {
        let t = Instant::now();
        std::hint::black_box(selector.stage1_pool(q)?);
        let a = t.elapsed().as_secs_f64();
        let t = Instant::now();
        std::hint::black_box(selector.select(q)?);
        let b = t.elapsed().as_secs_f64();
        s1.push(a);
        s2.push((b - a).max(0.0));
        total.push(b);
    }
    let sum: f64 = total.iter().sum();
    Ok(StageTimings {
        stage1: config.stage1,
        stage2: config.stage2,
        queries: test.len(),
        setup_secs,
        stage1_median_secs: median(&mut s1),
        stage2_median_secs: median(&mut s2),
        total_median_secs: median(&mut total),
        total_mean_secs: if total.is_empty() { 0.0 } else { sum / total.len() as f64 },
        total_secs: sum,
    })
}

/// Parses `stage1:stage2` pairs such as `bm25:tk`.
pub fn parse_pairs(list: &str) -> Result<Vec<(Stage1, Stage2)>> {
    list.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once(':').with_context(|| format!("expected stage1:stage2, got {p:?}"))?;
            Ok((a.parse().map_err(anyhow::Error::msg)?, b.parse().map_err(anyhow::Error::msg)?))
        })
        .collect()
}

pub struct BenchArgs<'a> {
    pub synthetic: Option<usize>,
    pub train_bundle: Option<&'a Path>,
    pub test_bundle: Option<&'a Path>,
    pub queries: usize,
    pub seed: u64,
    pub configs: &'a str,
    pub base: SelectionConfig,
    pub out: Option<&'a Path>,
}

pub fn bench(args: BenchArgs<'_>) -> Result<Vec<StageTimings>> {
    let pairs = parse_pairs(args.configs)?;
    let (train, mut test) = match (args.synthetic, args.train_bundle, args.test_bundle) {
        (Some(n), None, None) => synthetic_pair(n, args.queries, args.seed)?,
        (None, Some(a), Some(b)) => load_pair(a, b)?,
        _ => bail!("give either --synthetic N or both --train-bundle and --test-bundle"),
    };
    test.examples.truncate(args.queries);
    let mut rows = Vec::with_capacity(pairs.len());
    for (stage1, stage2) in pairs {
        let config = SelectionConfig {
            stage1,
            stage2,
            ..args.base.clone()
        };
        config.validate()?;
        let t = time_config(&train, &test, config)?;
        println!(
            "{:<6} {:<7} queries {:>5}  setup {:>8.3}s  stage1 {:>9.6}s  stage2 {:>9.6}s  total {:>9.6}s (median/query)",
            t.stage1.to_string(),
            t.stage2.to_string(),
            t.queries,
            t.setup_secs,
            t.stage1_median_secs,
            t.stage2_median_secs,
            t.total_median_secs
        );
        rows.push(t);
    }
    if let Some(dir) = args.out {
        create_dir(dir)?;
        let path = dir.join(BENCH_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        let mut m = Manifest::new(
            "bench",
            serde_json::json!({
                "synthetic": args.synthetic,
                "queries": args.queries,
                "seed": args.seed,
                "configs": args.configs,
                "selection": args.base,
            }),
        )?;
        m.input("train_corpus", train.content_hash()).input("test_corpus", test.content_hash());
        m.write(dir, &[BENCH_FILE.to_owned()])?;
    }
    Ok(rows)
}
