//! Independent reference implementations used by the integration and
//! acceptance tests. They favour obviousness over speed.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syntaxicl::treebank::{DepTree, LabelVocab};

/// A tree as nested values, built without the arena representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Nested {
    pub label: u32,
    pub children: Vec<Nested>,
}

impl Nested {
    pub fn from_tree(t: &DepTree) -> Self {
        fn go(t: &DepTree, i: usize) -> Nested {
            Nested {
                label: t.node(i).label,
                children: t.node(i).children.iter().map(|&c| go(t, c)).collect(),
            }
        }
        go(t, t.root())
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Line-by-line transcription of the recursive kernel.
pub fn comp_sim(a: &Nested, b: &Nested) -> f64 {
    let mut k = 0.0;
    for ca in &a.children {
        for cb in &b.children {
            if ca.label == cb.label {
                if ca.is_leaf() && cb.is_leaf() {
                    k += 1.0;
                } else if !ca.is_leaf() && !cb.is_leaf() {
                    k += comp_sim(ca, cb);
                }
            }
        }
    }
    let na = if a.children.is_empty() { 1.0 } else { a.children.len() as f64 };
    let nb = if b.children.is_empty() { 1.0 } else { b.children.len() as f64 };
    k / (na * nb)
}

/// Unmerged monomial list of the tree polynomial: a leaf is `x_l`; an
/// internal node is `y_l` followed by every pick of one monomial per child.
pub fn expand(t: &Nested, d: usize) -> Vec<(Vec<u16>, u64)> {
    let mut unit = vec![0u16; 2 * d];
    if t.is_leaf() {
        unit[t.label as usize] = 1;
        return vec![(unit, 1)];
    }
    let mut product: Vec<(Vec<u16>, u64)> = vec![(vec![0u16; 2 * d], 1)];
    for c in &t.children {
        let sub = expand(c, d);
        let mut next = Vec::new();
        for (e1, c1) in &product {
            for (e2, c2) in &sub {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                next.push((e, c1 * c2));
            }
        }
        product = next;
    }
    unit[d + t.label as usize] = 1;
    let mut out = vec![(unit, 1)];
    out.extend(product);
    out
}

/// Merges like monomials.
pub fn merge(terms: Vec<(Vec<u16>, u64)>) -> BTreeMap<Vec<u16>, u64> {
    let mut m = BTreeMap::new();
    for (e, c) in terms {
        *m.entry(e).or_insert(0) += c;
    }
    m
}

/// Brute-force term-set distance over all pairs.
pub fn term_distance(p: &BTreeMap<Vec<u16>, u64>, q: &BTreeMap<Vec<u16>, u64>, w: &[f64]) -> f64 {
    let dist = |(e1, c1): (&Vec<u16>, &u64), (e2, c2): (&Vec<u16>, &u64)| -> f64 {
        let mut s = 0.0;
        for k in 0..e1.len() {
            s += w[k] * (f64::from(e1[k]) - f64::from(e2[k])).abs();
        }
        s + w[e1.len()] * (*c1 as f64 - *c2 as f64).abs()
    };
    let mut total = 0.0;
    for s in p.iter() {
        total += q.iter().map(|t| dist(s, t)).fold(f64::INFINITY, f64::min);
    }
    for t in q.iter() {
        total += p.iter().map(|s| dist(s, t)).fold(f64::INFINITY, f64::min);
    }
    total / (p.len() + q.len()) as f64
}

/// Exhaustive BM25 from raw token lists.
pub fn bm25_scores(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(Vec::len).sum();
    let avg = total as f64 / n;
    let mut scores = vec![0.0; docs.len()];
    for term in query {
        let df = docs.iter().filter(|d| d.contains(term)).count();
        if df == 0 {
            continue;
        }
        let idf = (1.0 + (n - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
        for (i, d) in docs.iter().enumerate() {
            let tf = d.iter().filter(|t| *t == term).count();
            if tf == 0 {
                continue;
            }
            let tf = tf as f64;
            let norm = tf + k1 * (1.0 - b + b * d.len() as f64 / avg);
            scores[i] += idf * tf * (k1 + 1.0) / norm;
        }
    }
    scores
}

/// Cosine of two vectors after scaling each to unit length.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ua: Vec<f64> = a.iter().map(|x| x / na).collect();
    let ub: Vec<f64> = b.iter().map(|x| x / nb).collect();
    ua.iter().zip(&ub).map(|(x, y)| x * y).sum()
}

/// Ids sorted by descending score, ties by ascending id.
pub fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    ids
}

/// Quadratic Levenshtein distance over tokens.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Random tree with `n` nodes over labels `0..labels`, as heads and labels.
pub fn random_heads(rng: &mut ChaCha8Rng, n: usize, labels: u32) -> (Vec<usize>, Vec<u32>) {
    // node at position perm[k] attaches to an earlier-placed node
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = perm[rng.random_range(0..k)];
        heads[perm[k]] = parent + 1;
    }
    let labs = (0..n).map(|_| rng.random_range(0..labels)).collect();
    (heads, labs)
}

pub fn tree_from(heads: &[usize], labels: &[u32]) -> DepTree {
    let forms = (0..heads.len()).map(|i| format!("t{i}")).collect();
    DepTree::from_heads(0, forms, heads, labels).expect("valid tree")
}

pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize, labels: u32) -> DepTree {
    let n = rng.random_range(1..=max_nodes);
    let (h, l) = random_heads(rng, n, labels);
    tree_from(&h, &l)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vocabulary `l0..l{n-1}`.
pub fn plain_vocab(n: u32) -> LabelVocab {
    LabelVocab::from_labels((0..n).map(|i| format!("l{i}")))
}

/// Every rooted, ordered tree shape on `n` nodes as head arrays, with nodes
/// numbered in preorder.
pub fn all_shapes(n: usize) -> Vec<Vec<usize>> {
    // node k (k >= 1) picks a parent on the rightmost path of nodes 0..k
    fn go(k: usize, n: usize, heads: &mut Vec<usize>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == n {
            out.push(heads.clone());
            return;
        }
        for depth in 0..path.len() {
            let parent = path[depth];
            let saved: Vec<usize> = path.drain(depth + 1..).collect();
            heads.push(parent + 1);
            path.push(k);
            go(k + 1, n, heads, path, out);
            path.pop();
            heads.pop();
            path.extend(saved);
        }
    }
    let mut out = Vec::new();
    go(1, n, &mut vec![0], &mut vec![0], &mut out);
    out
}
