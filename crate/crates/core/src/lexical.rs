//! Stage-I retrieval: Okapi BM25 over source sentences and cosine
//! similarity over externally supplied sentence vectors.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LexicalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("vector dimension {found}, index dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {row} is a zero vector")]
    ZeroVector { row: usize },
    #[error("document {doc} has no embedding")]
    MissingVector { doc: usize },
}

/// Lowercased whitespace tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Descending score, then ascending id.
pub fn score_rank_cmp(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn top_k(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, score_rank_cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(score_rank_cmp);
    scored
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl Bm25Index {
    /// Indexes each document's [`tokenize`]d text; document ids are
    /// positions in `docs`.
    pub fn build<S: AsRef<str>>(docs: &[S], params: Bm25Params) -> Result<Self, LexicalError> {
        if docs.is_empty() {
            return Err(LexicalError::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (id, doc) in docs.iter().enumerate() {
            let tokens = tokenize(doc.as_ref());
            doc_lengths.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting { doc: id as u32, tf });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / docs.len() as f64;
        Ok(Self {
            postings,
            doc_lengths,
            avg_doc_length,
            params,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc: usize) -> u32 {
        self.doc_lengths[doc]
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// `ln(1 + (N - n + 0.5) / (n + 0.5))`; never negative.
    pub fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.n_docs() as f64;
        let df = doc_freq as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Score of every document; each query token (duplicates included)
    /// adds its term contribution in query order.
    pub fn score_all(&self, query: &str) -> Vec<f64> {
        let Bm25Params { k1, b } = self.params;
        let mut scores = vec![0.0; self.n_docs()];
        for token in tokenize(query) {
            let postings = self.postings(&token);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(postings.len());
            for p in postings {
                let tf = f64::from(p.tf);
                let len = f64::from(self.doc_lengths[p.doc as usize]);
                let norm = tf + k1 * (1.0 - b + b * len / self.avg_doc_length);
                scores[p.doc as usize] += idf * tf * (k1 + 1.0) / norm;
            }
        }
        scores
    }

    /// Top-`k` documents by BM25, descending, ties by lower id.
    pub fn top_k(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        top_k(self.score_all(query).into_iter().enumerate().collect(), k)
    }
}

/// Row-normalized sentence vectors.
#[derive(Debug, Clone)]
pub struct DenseIndex {
    vectors: Vec<f64>,
    dim: usize,
}

pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

impl DenseIndex {
    pub fn build<V: AsRef<[f64]>>(rows: &[V]) -> Result<Self, LexicalError> {
        let dim = rows.first().ok_or(LexicalError::EmptyCorpus)?.as_ref().len();
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(LexicalError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            vectors.extend(normalize(r).ok_or(LexicalError::ZeroVector { row: i })?);
        }
        Ok(Self { vectors, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_docs(&self) -> usize {
        self.vectors.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn score_all(&self, query: &[f64]) -> Result<Vec<f64>, LexicalError> {
        if query.len() != self.dim {
            return Err(LexicalError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let q = normalize(query).ok_or(LexicalError::ZeroVector { row: 0 })?;
        Ok((0..self.n_docs())
            .map(|i| self.row(i).iter().zip(&q).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Top-`k` rows by cosine similarity, descending, ties by lower id.
    pub fn top_k(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>, LexicalError> {
        Ok(top_k(self.score_all(query)?.into_iter().enumerate().collect(), k))
    }
}
