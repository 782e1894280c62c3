//! Polynomial representation of dependency trees and the term-vector
//! distance between them.
//!
//! A leaf labelled `l` maps to `x_l`; an internal node labelled `l` with
//! children `n_1..n_k` maps to `y_l + P(n_1) * ... * P(n_k)`. Each term of
//! the resulting polynomial becomes a vector of `2d + 1` entries: the `d`
//! x-exponents, the `d` y-exponents and the coefficient. Two polynomials are
//! compared by the symmetric mean of nearest-term Manhattan distances.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::treebank::{DepTree, LabelVocab};

/// Default cap on the number of distinct terms of one tree polynomial.
pub const DEFAULT_TERM_BUDGET: usize = 200_000;

/// Error-label weight used by the weighted distance.
pub const DEFAULT_ERROR_WEIGHT: f64 = 2.0;

pub type Exponent = u16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial expansion exceeded the budget of {cap} terms")]
    TermBudgetExceeded { cap: usize },
    #[error("coefficient overflow during expansion")]
    CoefficientOverflow,
    #[error("exponent overflow during expansion")]
    ExponentOverflow,
    #[error("distance between empty polynomials is undefined")]
    EmptyPolynomial,
    #[error("label dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("weight profile has {found} entries, expected {expected}")]
    BadWeights { expected: usize, found: usize },
}

/// One term: exponents of `x_1..x_d, y_1..y_d` and a positive coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermVector<'a> {
    pub exponents: &'a [Exponent],
    pub coefficient: u64,
}

/// A polynomial with merged like terms, sorted by exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    d: usize,
    exps: Vec<Exponent>,
    coeffs: Vec<u64>,
    // per term: exponent sum plus coefficient, a lower-bound key for the
    // nearest-term search
    norms: Vec<u128>,
    // term indices by ascending norm
    order: Vec<u32>,
}

impl Polynomial {
    /// Builds a polynomial from arbitrary terms, merging duplicates.
    /// Zero-coefficient terms are dropped.
    pub fn from_terms<I>(d: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<Exponent>, u64)>,
    {
        let mut acc: HashMap<Box<[Exponent]>, u64> = HashMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), 2 * d, "exponent vector length must be 2d");
            if c == 0 {
                continue;
            }
            let slot = acc.entry(e.into_boxed_slice()).or_insert(0);
            *slot = slot.checked_add(c).ok_or(PolyError::CoefficientOverflow)?;
        }
        Ok(Self::from_map(d, acc))
    }

    fn from_map(d: usize, acc: HashMap<Box<[Exponent]>, u64>) -> Self {
        let mut terms: Vec<(Box<[Exponent]>, u64)> = acc.into_iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let width = 2 * d;
        let mut exps = Vec::with_capacity(terms.len() * width);
        let mut coeffs = Vec::with_capacity(terms.len());
        let mut norms = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            norms.push(e.iter().map(|&x| u128::from(x)).sum::<u128>() + u128::from(c));
            exps.extend_from_slice(&e);
            coeffs.push(c);
        }
        let mut order: Vec<u32> = (0..coeffs.len() as u32).collect();
        order.sort_by_key(|&i| norms[i as usize]);
        Self {
            d,
            exps,
            coeffs,
            norms,
            order,
        }
    }

    /// The monomial `x_label` (or `y_label` when `internal`).
    pub fn variable(d: usize, label: usize, internal: bool) -> Self {
        let mut e = vec![0; 2 * d];
        e[if internal { d + label } else { label }] = 1;
        Self::from_terms(d, [(e, 1)]).expect("single term")
    }

    /// Number of labels the exponent vectors are indexed by.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = TermVector<'_>> + '_ {
        let width = 2 * self.d;
        self.coeffs.iter().enumerate().map(move |(i, &c)| TermVector {
            exponents: &self.exps[i * width..(i + 1) * width],
            coefficient: c,
        })
    }

    pub fn coefficient_of(&self, exponents: &[Exponent]) -> Option<u64> {
        self.terms().find(|t| t.exponents == exponents).map(|t| t.coefficient)
    }

    /// Adds the monomial with the given exponents and coefficient 1.
    fn add_unit(&self, exponents: &[Exponent]) -> Result<Self, PolyError> {
        let terms = self
            .terms()
            .map(|t| (t.exponents.to_vec(), t.coefficient))
            .chain(std::iter::once((exponents.to_vec(), 1)));
        Self::from_terms(self.d, terms)
    }
}

/// Distributive product with like terms merged. Fails once the number of
/// distinct terms exceeds `budget`.
pub fn poly_multiply(p: &Polynomial, q: &Polynomial, budget: usize) -> Result<Polynomial, PolyError> {
    if p.d != q.d {
        return Err(PolyError::DimensionMismatch {
            left: p.d,
            right: q.d,
        });
    }
    let mut acc: HashMap<Box<[Exponent]>, u64> = HashMap::with_capacity(p.len().saturating_mul(q.len()).min(budget + 1));
    let mut buf = vec![0 as Exponent; 2 * p.d];
    for s in p.terms() {
        for t in q.terms() {
            for ((b, &x), &y) in buf.iter_mut().zip(s.exponents).zip(t.exponents) {
                *b = x.checked_add(y).ok_or(PolyError::ExponentOverflow)?;
            }
            let c = s
                .coefficient
                .checked_mul(t.coefficient)
                .ok_or(PolyError::CoefficientOverflow)?;
            if let Some(slot) = acc.get_mut(&buf[..]) {
                *slot = slot.checked_add(c).ok_or(PolyError::CoefficientOverflow)?;
            } else {
                if acc.len() == budget {
                    return Err(PolyError::TermBudgetExceeded { cap: budget });
                }
                acc.insert(buf.clone().into_boxed_slice(), c);
            }
        }
    }
    Ok(Polynomial::from_map(p.d, acc))
}

/// Polynomial of `tree` over the label set of `vocab`.
pub fn tree_to_polynomial(tree: &DepTree, vocab: &LabelVocab, budget: usize) -> Result<Polynomial, PolyError> {
    node_polynomial(tree, tree.root(), vocab.len(), budget)
}

fn node_polynomial(tree: &DepTree, node: usize, d: usize, budget: usize) -> Result<Polynomial, PolyError> {
    let n = tree.node(node);
    let label = n.label as usize;
    if n.is_leaf() {
        return Ok(Polynomial::variable(d, label, false));
    }
    let mut product: Option<Polynomial> = None;
    for &c in &n.children {
        let child = node_polynomial(tree, c, d, budget)?;
        product = Some(match product {
            None => child,
            Some(p) => poly_multiply(&p, &child, budget)?,
        });
    }
    let product = product.expect("internal node has children");
    let mut y = vec![0; 2 * d];
    y[d + label] = 1;
    let out = product.add_unit(&y)?;
    if out.len() > budget {
        return Err(PolyError::TermBudgetExceeded { cap: budget });
    }
    Ok(out)
}

/// Per-entry multipliers for the Manhattan distance: `2d` exponent entries
/// followed by the coefficient entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    weights: Vec<f64>,
}

impl WeightProfile {
    pub fn ones(d: usize) -> Self {
        Self {
            weights: vec![1.0; 2 * d + 1],
        }
    }

    /// Weight `error_weight` on the x and y entries of the labels `S`, `R`
    /// and `M`; 1 elsewhere, including the coefficient entry.
    pub fn error_labels(vocab: &LabelVocab, error_weight: f64) -> Self {
        let d = vocab.len();
        let mut w = Self::ones(d);
        for id in vocab.error_labels() {
            w.weights[id as usize] = error_weight;
            w.weights[d + id as usize] = error_weight;
        }
        w
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        assert!(
            weights.iter().all(|w| w.is_finite() && *w > 0.0),
            "weights must be finite and positive"
        );
        assert!(weights.len() % 2 == 1, "weight profile has 2d + 1 entries");
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

/// Term-set distance. Uses exact integer arithmetic when `w` is all ones.
pub fn poly_distance(p: &Polynomial, q: &Polynomial, w: &WeightProfile) -> Result<f64, PolyError> {
    if p.d != q.d {
        return Err(PolyError::DimensionMismatch {
            left: p.d,
            right: q.d,
        });
    }
    if w.weights.len() != 2 * p.d + 1 {
        return Err(PolyError::BadWeights {
            expected: 2 * p.d + 1,
            found: w.weights.len(),
        });
    }
    if p.is_empty() || q.is_empty() {
        return Err(PolyError::EmptyPolynomial);
    }
    let total = (p.len() + q.len()) as f64;
    let width = 2 * p.d;
    let exp_l1 = |i: usize, j: usize| -> u32 {
        let s = &p.exps[i * width..(i + 1) * width];
        let t = &q.exps[j * width..(j + 1) * width];
        s.iter().zip(t).map(|(&x, &y)| u32::from(x.abs_diff(y))).sum()
    };
    if w.is_uniform() {
        // Abandons once the partial sum reaches `cap`; such a value never
        // wins, so minima stay exact.
        let dist = |i: usize, j: usize, cap: Option<u128>| -> u128 {
            let cap = cap.unwrap_or(u128::MAX);
            let mut acc = u128::from(p.coeffs[i].abs_diff(q.coeffs[j]));
            let s = &p.exps[i * width..(i + 1) * width];
            let t = &q.exps[j * width..(j + 1) * width];
            for (cs, ct) in s.chunks(16).zip(t.chunks(16)) {
                if acc >= cap {
                    return acc;
                }
                acc += u128::from(cs.iter().zip(ct).map(|(&x, &y)| u32::from(x.abs_diff(y))).sum::<u32>());
            }
            acc
        };
        let gap = |x: u128, y: u128| x.abs_diff(y);
        let stop = |bound: u128, best: u128| bound >= best;
        let sp: u128 = nearest_sum(p, q, &dist, gap, stop).iter().sum();
        let sq: u128 = nearest_sum(q, p, &|j, i, cap| dist(i, j, cap), gap, stop).iter().sum();
        Ok((sp + sq) as f64 / total)
    } else {
        // sum_k w_k |d_k| = sum_k |d_k| + sum_k (w_k - 1) |d_k|
        let extra: Vec<(usize, f64)> = w.weights[..width]
            .iter()
            .enumerate()
            .filter(|(_, &wk)| wk != 1.0)
            .map(|(k, &wk)| (k, wk - 1.0))
            .collect();
        let coef_w = w.weights[width];
        let w_min = w.weights.iter().copied().fold(f64::INFINITY, f64::min);
        let dist = |i: usize, j: usize| -> f64 {
            let s = &p.exps[i * width..(i + 1) * width];
            let t = &q.exps[j * width..(j + 1) * width];
            let mut d = f64::from(exp_l1(i, j));
            for &(k, dw) in &extra {
                d += dw * f64::from(s[k].abs_diff(t[k]));
            }
            d + coef_w * p.coeffs[i].abs_diff(q.coeffs[j]) as f64
        };
        let gap = |x: u128, y: u128| w_min * x.abs_diff(y) as f64;
        // The bound is exact up to rounding; the slack keeps pruning
        // conservative.
        let stop = |bound: f64, best: f64| bound > best * (1.0 + 1e-9) + 1e-9;
        let sp: f64 = nearest_sum(p, q, &|i, j, _| dist(i, j), gap, stop).iter().sum();
        let sq: f64 = nearest_sum(q, p, &|j, i, _| dist(i, j), gap, stop).iter().sum();
        Ok((sp + sq) / total)
    }
}

// For each term of `a` (in term order), the distance to its nearest term of
// `b`. Terms of `b` are visited outward from the query's norm; `gap` of two
// norms is a lower bound on their distance, so the scan ends once the bound
// cannot beat the best distance so far. `dist(i, j)` is symmetric
// bit-for-bit, so each minimum equals the brute-force one and swapping the
// arguments swaps the two sums. `dist` gets the best so far and may return
// any value at least that large once it knows it cannot win.
fn nearest_sum<T, D, G, S>(a: &Polynomial, b: &Polynomial, dist: &D, gap: G, can_stop: S) -> Vec<T>
where
    T: Copy + PartialOrd,
    D: Fn(usize, usize, Option<T>) -> T,
    G: Fn(u128, u128) -> T,
    S: Fn(T, T) -> bool,
{
    let sorted: Vec<u128> = b.order.iter().map(|&j| b.norms[j as usize]).collect();
    a.norms
        .iter()
        .enumerate()
        .map(|(i, &na)| {
            let mut hi = sorted.partition_point(|&x| x < na);
            let mut lo = hi;
            let mut best: Option<T> = None;
            loop {
                let up = (hi < sorted.len()).then(|| sorted[hi] - na);
                let down = (lo > 0).then(|| na - sorted[lo - 1]);
                let take_up = match (up, down) {
                    (None, None) => break,
                    (Some(u), Some(d)) => u <= d,
                    (u, _) => u.is_some(),
                };
                let bound = gap(if take_up { sorted[hi] } else { sorted[lo - 1] }, na);
                if let Some(b) = best {
                    if can_stop(bound, b) {
                        break;
                    }
                }
                let j = if take_up {
                    hi += 1;
                    b.order[hi - 1]
                } else {
                    lo -= 1;
                    b.order[lo]
                };
                let d = dist(i, j as usize, best);
                if best.is_none_or(|b| d < b) {
                    best = Some(d);
                }
            }
            best.expect("non-empty polynomial")
        })
        .collect()
}

/// Ascending distance, then ascending id.
pub fn distance_rank_cmp(a: (usize, f64), b: (usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Ids ordered from most to least similar.
pub fn rank_by_distance(scored: &[(usize, f64)]) -> Vec<usize> {
    let mut v = scored.to_vec();
    v.sort_by(|a, b| distance_rank_cmp(*a, *b));
    v.into_iter().map(|(id, _)| id).collect()
}

/// Text cache of precomputed polynomials.
///
/// ```text
/// polycache 1
/// corpus <corpus hash>
/// vocab <vocab hash>
/// d <labels> n <examples>
/// terms <count>          (or `overflow`)
/// <e_1> ... <e_2d> <coefficient>
/// ```
pub mod cache {
    use super::*;

    pub fn write(corpus_hash: &str, vocab_hash: &str, d: usize, polys: &[Result<Polynomial, PolyError>]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "polycache 1\ncorpus {corpus_hash}\nvocab {vocab_hash}\nd {d} n {}", polys.len());
        for p in polys {
            match p {
                Ok(p) => {
                    let _ = writeln!(out, "terms {}", p.len());
                    for t in p.terms() {
                        for e in t.exponents {
                            let _ = write!(out, "{e} ");
                        }
                        let _ = writeln!(out, "{}", t.coefficient);
                    }
                }
                Err(_) => out.push_str("overflow\n"),
            }
        }
        out
    }

    /// Parses a cache, returning `None` when it is stale or unreadable.
    /// Overflowed entries are reported with the given `budget`.
    pub fn read(
        text: &str,
        corpus_hash: &str,
        vocab_hash: &str,
        d: usize,
        budget: usize,
    ) -> Option<Vec<Result<Polynomial, PolyError>>> {
        let mut lines = text.lines();
        if lines.next()? != "polycache 1" {
            return None;
        }
        if lines.next()?.strip_prefix("corpus ")? != corpus_hash {
            return None;
        }
        if lines.next()?.strip_prefix("vocab ")? != vocab_hash {
            return None;
        }
        let header: Vec<&str> = lines.next()?.split(' ').collect();
        if header.len() != 4 || header[0] != "d" || header[2] != "n" || header[1].parse::<usize>().ok()? != d {
            return None;
        }
        let n: usize = header[3].parse().ok()?;
        let mut polys = Vec::with_capacity(n);
        for _ in 0..n {
            let head = lines.next()?;
            if head == "overflow" {
                polys.push(Err(PolyError::TermBudgetExceeded { cap: budget }));
                continue;
            }
            let count: usize = head.strip_prefix("terms ")?.parse().ok()?;
            let mut terms = Vec::with_capacity(count);
            for _ in 0..count {
                let nums: Vec<u64> = lines.next()?.split(' ').map(|x| x.parse().ok()).collect::<Option<_>>()?;
                if nums.len() != 2 * d + 1 {
                    return None;
                }
                let exps = nums[..2 * d].iter().map(|&e| Exponent::try_from(e).ok()).collect::<Option<_>>()?;
                terms.push((exps, nums[2 * d]));
            }
            polys.push(Ok(Polynomial::from_terms(d, terms).ok()?));
        }
        Some(polys)
    }
}
