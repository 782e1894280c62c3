//! Two-stage example selection.
//!
//! Stage I narrows the training corpus to a candidate pool (BM25 over
//! source sentences, cosine over sentence vectors, or the whole corpus).
//! Stage II ranks the pool by syntactic similarity to the query tree and
//! keeps the best `shots` examples, most similar first.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexical::{Bm25Index, Bm25Params, DenseIndex, LexicalError};
use crate::treebank::{Corpus, Example};
use crate::treekernel::{tree_kernel_similarity, KernelScore};
use crate::treepoly::{
    distance_rank_cmp, poly_distance, tree_to_polynomial, PolyError, Polynomial, WeightProfile,
    DEFAULT_ERROR_WEIGHT, DEFAULT_TERM_BUDGET,
};

pub const DEFAULT_CANDIDATES: usize = 1000;
pub const DEFAULT_SHOTS: usize = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing precomputation: {0}")]
    MissingPrecomputation(String),
    #[error("query {query}: label id {label} is outside the corpus vocabulary")]
    VocabMismatch { query: usize, label: u32 },
    #[error(transparent)]
    Lexical(#[from] LexicalError),
    #[error("{} queries failed; first: query {}: {}", .0.len(), .0[0].0, .0[0].1)]
    Batch(Vec<(usize, String)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1 {
    None,
    Bm25,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2 {
    None,
    TreeKernel,
    Poly,
    WeightedPoly,
    Random,
}

impl Stage2 {
    pub fn uses_polynomials(self) -> bool {
        matches!(self, Stage2::Poly | Stage2::WeightedPoly)
    }
}

impl FromStr for Stage1 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Stage1::None),
            "bm25" => Ok(Stage1::Bm25),
            "dense" | "bert" => Ok(Stage1::Dense),
            _ => Err(format!("unknown stage-I method {s:?} (none, bm25, dense)")),
        }
    }
}

impl FromStr for Stage2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Stage2::None),
            "tk" | "tree_kernel" => Ok(Stage2::TreeKernel),
            "poly" => Ok(Stage2::Poly),
            "wpoly" | "weighted_poly" => Ok(Stage2::WeightedPoly),
            "random" => Ok(Stage2::Random),
            _ => Err(format!("unknown stage-II method {s:?} (none, tk, poly, wpoly, random)")),
        }
    }
}

impl fmt::Display for Stage1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage1::None => "none",
            Stage1::Bm25 => "bm25",
            Stage1::Dense => "dense",
        })
    }
}

impl fmt::Display for Stage2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage2::None => "none",
            Stage2::TreeKernel => "tk",
            Stage2::Poly => "poly",
            Stage2::WeightedPoly => "wpoly",
            Stage2::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub stage1: Stage1,
    pub stage2: Stage2,
    pub candidate_size: usize,
    pub shots: usize,
    pub random_seed: u64,
    pub error_weight: f64,
    pub term_budget: usize,
    pub bm25: Bm25ParamsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25ParamsConfig {
    pub k1: f64,
    pub b: f64,
}

impl From<Bm25ParamsConfig> for Bm25Params {
    fn from(c: Bm25ParamsConfig) -> Self {
        Bm25Params { k1: c.k1, b: c.b }
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            stage1: Stage1::Bm25,
            stage2: Stage2::TreeKernel,
            candidate_size: DEFAULT_CANDIDATES,
            shots: DEFAULT_SHOTS,
            random_seed: 0,
            error_weight: DEFAULT_ERROR_WEIGHT,
            term_budget: DEFAULT_TERM_BUDGET,
            bm25: Bm25ParamsConfig { k1: p.k1, b: p.b },
        }
    }
}

impl SelectionConfig {
    pub fn new(stage1: Stage1, stage2: Stage2) -> Self {
        Self {
            stage1,
            stage2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_owned()));
        if self.stage1 == Stage1::None && self.stage2 == Stage2::None {
            return bad("stage1 and stage2 cannot both be none");
        }
        if self.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.candidate_size < self.shots {
            return bad("candidate size must be at least the shot count");
        }
        if !(self.error_weight.is_finite() && self.error_weight > 0.0) {
            return bad("error weight must be positive");
        }
        if self.term_budget == 0 {
            return bad("term budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub id: usize,
    /// Stage-II score (kernel similarity or polynomial distance), or the
    /// stage-I score when there is no stage II. Absent for random picks.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fallback {
    /// The query polynomial exceeded the term budget; the pool was ranked
    /// by tree kernel instead.
    QueryPolynomialBudget,
    /// A candidate's polynomial exceeded the budget; it was ranked after
    /// every comparable candidate, by tree kernel.
    CandidatePolynomialBudget { id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub query_id: usize,
    pub stage1: Stage1,
    pub stage2: Stage2,
    pub chosen: Vec<Chosen>,
    pub stage1_pool_size: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallbacks: Vec<Fallback>,
}

impl SelectionResult {
    pub fn ids(&self) -> Vec<usize> {
        self.chosen.iter().map(|c| c.id).collect()
    }
}

/// Uniform sample of `shots` distinct ids from `0..n`, reproducible from
/// `seed`.
pub fn random_baseline(n: usize, shots: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n, shots.min(n)).into_vec()
}

/// Precomputed indices over a training corpus.
pub struct Selector<'a> {
    corpus: &'a Corpus,
    config: SelectionConfig,
    bm25: Option<Bm25Index>,
    dense: Option<DenseIndex>,
    polys: Option<Vec<Result<Polynomial, PolyError>>>,
    weights: WeightProfile,
}

impl<'a> Selector<'a> {
    /// Builds every index the configuration needs.
    pub fn new(corpus: &'a Corpus, config: SelectionConfig) -> Result<Self, PipelineError> {
        let polys = if config.stage2.uses_polynomials() {
            Some(precompute_polynomials(corpus, config.term_budget))
        } else {
            None
        };
        Self::with_polynomials(corpus, config, polys)
    }

    /// Like [`Selector::new`] but with externally supplied polynomials
    /// (e.g. from a cache), one per corpus example.
    pub fn with_polynomials(
        corpus: &'a Corpus,
        config: SelectionConfig,
        polys: Option<Vec<Result<Polynomial, PolyError>>>,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(PipelineError::InvalidConfig("training corpus is empty".into()));
        }
        let bm25 = match config.stage1 {
            Stage1::Bm25 => {
                let docs: Vec<&str> = corpus.examples.iter().map(|e| e.source.as_str()).collect();
                Some(Bm25Index::build(&docs, config.bm25.into())?)
            }
            _ => None,
        };
        let dense = match config.stage1 {
            Stage1::Dense => {
                let rows = corpus
                    .examples
                    .iter()
                    .map(|e| {
                        e.embedding
                            .as_deref()
                            .ok_or(PipelineError::MissingPrecomputation(format!("training example {} has no embedding", e.id)))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(DenseIndex::build(&rows)?)
            }
            _ => None,
        };
        if config.stage2.uses_polynomials() {
            match &polys {
                Some(p) if p.len() == corpus.len() && p.iter().flatten().all(|p| p.dim() == corpus.vocab.len()) => {}
                Some(_) => {
                    return Err(PipelineError::MissingPrecomputation(
                        "polynomials do not match the corpus or its vocabulary".into(),
                    ))
                }
                None => return Err(PipelineError::MissingPrecomputation("training polynomials".into())),
            }
        }
        let weights = match config.stage2 {
            Stage2::WeightedPoly => WeightProfile::error_labels(&corpus.vocab, config.error_weight),
            _ => WeightProfile::ones(corpus.vocab.len()),
        };
        Ok(Self {
            corpus,
            config,
            bm25,
            dense,
            polys,
            weights,
        })
    }

    pub fn config(&self) -> &SelectionConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    pub fn polynomials(&self) -> Option<&[Result<Polynomial, PolyError>]> {
        self.polys.as_deref()
    }

    /// Stage-I pool: `(id, stage-I score)`, best first.
    pub fn stage1_pool(&self, query: &Example) -> Result<Vec<(usize, Option<f64>)>, PipelineError> {
        let k = self.config.candidate_size;
        Ok(match self.config.stage1 {
            Stage1::None => (0..self.corpus.len()).map(|i| (i, None)).collect(),
            Stage1::Bm25 => {
                let idx = self.bm25.as_ref().expect("built in constructor");
                idx.top_k(&query.source, k).into_iter().map(|(i, s)| (i, Some(s))).collect()
            }
            Stage1::Dense => {
                let idx = self.dense.as_ref().expect("built in constructor");
                let v = query.embedding.as_deref().ok_or_else(|| {
                    PipelineError::MissingPrecomputation(format!("query {} has no embedding", query.id))
                })?;
                idx.top_k(v, k)?.into_iter().map(|(i, s)| (i, Some(s))).collect()
            }
        })
    }

    fn check_vocab(&self, query: &Example) -> Result<(), PipelineError> {
        let d = self.corpus.vocab.len() as u32;
        match query.tree.nodes().iter().find(|n| n.label >= d) {
            Some(n) => Err(PipelineError::VocabMismatch {
                query: query.id,
                label: n.label,
            }),
            None => Ok(()),
        }
    }

    fn rank_by_kernel(&self, query: &Example, pool: &[usize]) -> Vec<Chosen> {
        let mut scored: Vec<(usize, KernelScore)> = pool
            .iter()
            .map(|&id| (id, tree_kernel_similarity(&query.tree, &self.corpus.examples[id].tree)))
            .collect();
        scored.sort_by(|a, b| KernelScore::rank_cmp(*a, *b));
        scored
            .into_iter()
            .map(|(id, s)| Chosen {
                id,
                score: Some(s.value()),
            })
            .collect()
    }

    fn rank_by_polynomial(&self, query: &Example, pool: &[usize], fallbacks: &mut Vec<Fallback>) -> Vec<Chosen> {
        let qp = match tree_to_polynomial(&query.tree, &self.corpus.vocab, self.config.term_budget) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("query {}: {e}; ranking by tree kernel", query.id);
                fallbacks.push(Fallback::QueryPolynomialBudget);
                return self.rank_by_kernel(query, pool);
            }
        };
        let polys = self.polys.as_ref().expect("checked in constructor");
        let mut scored = Vec::with_capacity(pool.len());
        let mut overflowed = Vec::new();
        for &id in pool {
            match &polys[id] {
                Ok(p) => scored.push((id, poly_distance(&qp, p, &self.weights).expect("validated dimensions"))),
                Err(_) => overflowed.push(id),
            }
        }
        scored.sort_by(|a, b| distance_rank_cmp(*a, *b));
        let mut out: Vec<Chosen> = scored
            .into_iter()
            .map(|(id, d)| Chosen { id, score: Some(d) })
            .collect();
        if !overflowed.is_empty() {
            fallbacks.extend(overflowed.iter().map(|&id| Fallback::CandidatePolynomialBudget { id }));
            out.extend(self.rank_by_kernel(query, &overflowed));
        }
        out
    }

    pub fn select(&self, query: &Example) -> Result<SelectionResult, PipelineError> {
        self.check_vocab(query)?;
        let pool = self.stage1_pool(query)?;
        let shots = self.config.shots;
        let mut fallbacks = Vec::new();
        let ids: Vec<usize> = pool.iter().map(|p| p.0).collect();
        let mut chosen = match self.config.stage2 {
            Stage2::None => pool.iter().map(|&(id, score)| Chosen { id, score }).take(shots).collect(),
            Stage2::TreeKernel => self.rank_by_kernel(query, &ids),
            Stage2::Poly | Stage2::WeightedPoly => self.rank_by_polynomial(query, &ids, &mut fallbacks),
            Stage2::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.random_seed);
                rng.set_stream(query.id as u64);
                rand::seq::index::sample(&mut rng, ids.len(), shots.min(ids.len()))
                    .into_iter()
                    .map(|i| Chosen { id: ids[i], score: None })
                    .collect()
            }
        };
        chosen.truncate(shots);
        Ok(SelectionResult {
            query_id: query.id,
            stage1: self.config.stage1,
            stage2: self.config.stage2,
            chosen,
            stage1_pool_size: pool.len(),
            fallbacks,
        })
    }

    /// Selects for every query, fanning out over at most `jobs` threads
    /// (`0` = rayon default). Output order follows `queries`.
    pub fn select_batch(&self, queries: &[Example], jobs: usize) -> Result<Vec<SelectionResult>, PipelineError> {
        let run = || -> Vec<Result<SelectionResult, PipelineError>> {
            queries.par_iter().map(|q| self.select(q)).collect()
        };
        let results = if jobs == 1 {
            queries.iter().map(|q| self.select(q)).collect()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?
                .install(run)
        };
        let mut out = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (q, r) in queries.iter().zip(results) {
            match r {
                Ok(r) => out.push(r),
                Err(e) => failures.push((q.id, e.to_string())),
            }
        }
        if failures.is_empty() {
            Ok(out)
        } else {
            Err(PipelineError::Batch(failures))
        }
    }
}

/// Polynomial of every training tree, in parallel. Trees that overflow the
/// term budget are kept as errors.
pub fn precompute_polynomials(corpus: &Corpus, budget: usize) -> Vec<Result<Polynomial, PolyError>> {
    let polys: Vec<_> = corpus
        .examples
        .par_iter()
        .map(|e| tree_to_polynomial(&e.tree, &corpus.vocab, budget))
        .collect();
    let overflow = polys.iter().filter(|p| p.is_err()).count();
    if overflow > 0 {
        log::warn!("{overflow} of {} trees exceeded the polynomial term budget", polys.len());
    }
    polys
}

pub fn write_jsonl<W: Write>(results: &[SelectionResult], mut w: W) -> io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Vec<SelectionResult>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(io::Error::other)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::LabelVocab;

    fn toy() -> Corpus {
        let sources = ["no smoking in public places", "no future for public transport", "i like cats", "cats like fish too"];
        let trees = "1\ta\t2\tdet\n2\tb\t0\tRoot\n3\tc\t2\tobj\n4\td\t3\tS\n5\te\t2\tpunct\n\n\
                     1\ta\t2\tdet\n2\tb\t0\tRoot\n3\tc\t2\tobj\n4\td\t3\tamod\n5\te\t2\tpunct\n\n\
                     1\ta\t2\tnsubj\n2\tb\t0\tRoot\n3\tc\t2\tobj\n\n\
                     1\ta\t2\tnsubj\n2\tb\t0\tRoot\n3\tc\t2\tobj\n4\td\t2\tR\n";
        Corpus::from_parts(
            sources.iter().map(|s| s.to_string()).collect(),
            sources.iter().map(|s| s.to_string()).collect(),
            trees,
            Some(vec![vec![1.0, 0.0], vec![0.8, 0.2], vec![0.0, 1.0], vec![0.1, 1.0]]),
            LabelVocab::new(),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SelectionConfig::new(Stage1::None, Stage2::None).validate().is_err());
        let mut c = SelectionConfig {
            shots: 0,
            ..SelectionConfig::default()
        };
        assert!(c.validate().is_err());
        c.shots = 5;
        c.candidate_size = 4;
        assert!(c.validate().is_err());
        assert!(SelectionConfig::default().validate().is_ok());
        let d = SelectionConfig::default();
        assert_eq!((d.candidate_size, d.shots, d.error_weight), (1000, 4, 2.0));
    }

    #[test]
    fn stage_parsing() {
        assert_eq!("tk".parse::<Stage2>().unwrap(), Stage2::TreeKernel);
        assert_eq!("wpoly".parse::<Stage2>().unwrap(), Stage2::WeightedPoly);
        assert!("x".parse::<Stage1>().is_err());
        assert_eq!(Stage2::WeightedPoly.to_string(), "wpoly");
    }

    #[test]
    fn bm25_pass_through() {
        let c = toy();
        let mut cfg = SelectionConfig::new(Stage1::Bm25, Stage2::None);
        cfg.shots = 2;
        cfg.candidate_size = 2;
        let sel = Selector::new(&c, cfg).unwrap();
        let q = &c.examples[0];
        let r = sel.select(q).unwrap();
        let idx = Bm25Index::build(&c.examples.iter().map(|e| e.source.as_str()).collect::<Vec<_>>(), Bm25Params::default()).unwrap();
        let expect: Vec<usize> = idx.top_k(&q.source, 2).into_iter().map(|x| x.0).collect();
        assert_eq!(r.ids(), expect);
        assert_eq!(r.stage1_pool_size, 2);
    }

    #[test]
    fn dense_requires_query_vector() {
        let c = toy();
        let mut cfg = SelectionConfig::new(Stage1::Dense, Stage2::TreeKernel);
        cfg.shots = 1;
        cfg.candidate_size = 2;
        let sel = Selector::new(&c, cfg).unwrap();
        let mut q = c.examples[2].clone();
        assert_eq!(sel.select(&q).unwrap().stage1_pool_size, 2);
        q.embedding = None;
        assert!(matches!(sel.select(&q), Err(PipelineError::MissingPrecomputation(_))));
    }

    #[test]
    fn weighted_poly_prefers_matching_error_labels() {
        let c = toy();
        let mut cfg = SelectionConfig::new(Stage1::None, Stage2::WeightedPoly);
        cfg.shots = 4;
        let sel = Selector::new(&c, cfg).unwrap();
        let r = sel.select(&c.examples[0]).unwrap();
        assert_eq!(r.chosen[0].id, 0);
        assert_eq!(r.chosen[0].score, Some(0.0));
        assert_eq!(r.chosen.len(), 4);
    }

    #[test]
    fn random_baseline_is_reproducible() {
        assert_eq!(random_baseline(1000, 4, 7), random_baseline(1000, 4, 7));
        let mut all = random_baseline(10, 10, 3);
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let differ = (0..10u64).filter(|&s| random_baseline(1000, 8, s) != random_baseline(1000, 8, s + 100)).count();
        assert_eq!(differ, 10);
    }

    #[test]
    fn random_stage_two_draws_from_pool() {
        let c = toy();
        let mut cfg = SelectionConfig::new(Stage1::Bm25, Stage2::Random);
        cfg.shots = 2;
        cfg.candidate_size = 3;
        cfg.random_seed = 11;
        let sel = Selector::new(&c, cfg).unwrap();
        let q = &c.examples[1];
        let r = sel.select(q).unwrap();
        let pool: Vec<usize> = sel.stage1_pool(q).unwrap().into_iter().map(|p| p.0).collect();
        assert!(r.ids().iter().all(|id| pool.contains(id)));
        assert_eq!(r, sel.select(q).unwrap());
    }

    #[test]
    fn polynomial_budget_fallback_is_recorded() {
        let c = toy();
        let mut cfg = SelectionConfig::new(Stage1::None, Stage2::Poly);
        cfg.term_budget = 2;
        let sel = Selector::new(&c, cfg).unwrap();
        let r = sel.select(&c.examples[2]).unwrap();
        assert!(r.fallbacks.contains(&Fallback::CandidatePolynomialBudget { id: 0 }));
        assert_eq!(r.chosen.len(), 4);

        let r = sel.select(&c.examples[0]).unwrap();
        assert_eq!(r.fallbacks, vec![Fallback::QueryPolynomialBudget]);
    }

    #[test]
    fn jsonl_round_trip() {
        let c = toy();
        let sel = Selector::new(&c, SelectionConfig::new(Stage1::Bm25, Stage2::TreeKernel)).unwrap();
        let rs = sel.select_batch(&c.examples, 2).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&rs, &mut buf).unwrap();
        assert_eq!(read_jsonl(&buf[..]).unwrap(), rs);
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_owned();
        assert!(first.starts_with("{\"query_id\":0,\"stage1\":\"bm25\",\"stage2\":\"tree_kernel\""));
    }
}
