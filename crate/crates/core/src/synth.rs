//! Reproducible synthetic GEC corpora: Zipfian word streams, random
//! dependency trees with UD-style labels, and S/R/M error tokens whose
//! targets apply the matching substitution, deletion or insertion.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::treebank::{Corpus, LabelVocab, TreebankError};

/// Dependency labels with rough relative frequencies.
const LABELS: [(&str, u32); 24] = [
    ("punct", 12),
    ("det", 9),
    ("case", 9),
    ("nsubj", 8),
    ("obj", 6),
    ("amod", 6),
    ("advmod", 5),
    ("obl", 5),
    ("nmod", 5),
    ("conj", 4),
    ("cc", 4),
    ("mark", 3),
    ("aux", 3),
    ("compound", 3),
    ("cop", 2),
    ("xcomp", 2),
    ("ccomp", 2),
    ("advcl", 2),
    ("acl", 2),
    ("nummod", 2),
    ("poss", 2),
    ("expl", 1),
    ("appos", 1),
    ("parataxis", 1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    /// Probability that a sentence carries errors.
    pub error_rate: f64,
    pub embedding_dim: Option<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            min_len: 3,
            max_len: 40,
            vocab_size: 5000,
            error_rate: 0.66,
            embedding_dim: Some(32),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    /// Four-column CoNLL text, one block per sentence.
    pub trees: String,
    pub embeddings: Option<Vec<Vec<f64>>>,
}

impl SynthCorpus {
    pub fn into_corpus(self, vocab: LabelVocab) -> Result<Corpus, TreebankError> {
        Corpus::from_parts(self.sources, self.targets, &self.trees, self.embeddings, vocab)
    }

    pub fn embeddings_text(&self) -> Option<String> {
        self.embeddings.as_ref().map(|rows| {
            rows.iter()
                .map(|r| r.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ") + "\n")
                .collect()
        })
    }
}

fn word(rank: usize) -> String {
    format!("w{rank}")
}

/// Random tree over `n` tokens: tokens are attached in random order, each
/// to an already placed token chosen with weight decaying in its depth, which
/// keeps trees shallow and leaf-heavy like natural dependency parses.
fn random_heads(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n];
    let mut depth = vec![0usize; n];
    let mut placed = vec![order[0]];
    let mut weights = vec![1.0f64];
    for &t in &order[1..] {
        let pick = WeightedIndex::new(&weights).expect("positive weights").sample(rng);
        let h = placed[pick];
        heads[t] = h + 1;
        depth[t] = depth[h] + 1;
        placed.push(t);
        weights.push(DEPTH_DECAY.powi(depth[t] as i32));
    }
    heads
}

const DEPTH_DECAY: f64 = 0.3;

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    assert!(cfg.min_len >= 1 && cfg.min_len <= cfg.max_len && cfg.vocab_size >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let zipf = WeightedIndex::new((1..=cfg.vocab_size).map(|r| 1.0 / r as f64)).expect("positive weights");
    let labels = WeightedIndex::new(LABELS.iter().map(|l| l.1)).expect("positive weights");
    let word_vectors: Option<Vec<Vec<f64>>> = cfg.embedding_dim.map(|d| {
        (0..cfg.vocab_size)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    });

    let mut out = SynthCorpus {
        sources: Vec::with_capacity(cfg.n),
        targets: Vec::with_capacity(cfg.n),
        trees: String::new(),
        embeddings: word_vectors.as_ref().map(|_| Vec::with_capacity(cfg.n)),
    };
    for _ in 0..cfg.n {
        // min of two uniforms: short sentences common, long ones rare
        let len = rng
            .random_range(cfg.min_len..=cfg.max_len)
            .min(rng.random_range(cfg.min_len..=cfg.max_len));
        let ranks: Vec<usize> = (0..len).map(|_| zipf.sample(&mut rng)).collect();
        let heads = random_heads(&mut rng, len);
        let mut tags: Vec<&str> = (0..len)
            .map(|i| if heads[i] == 0 { "Root" } else { LABELS[labels.sample(&mut rng)].0 })
            .collect();
        let mut target: Vec<String> = Vec::with_capacity(len + 1);
        let mut errors = vec![None; len];
        if rng.random_bool(cfg.error_rate) {
            for _ in 0..rng.random_range(1..=2) {
                let i = rng.random_range(0..len);
                if heads[i] != 0 {
                    errors[i] = Some(["S", "R", "M"][rng.random_range(0..3)]);
                }
            }
        }
        for i in 0..len {
            match errors[i] {
                Some("S") => target.push(word((ranks[i] + 1) % cfg.vocab_size)),
                Some("R") => {}
                Some(_) => {
                    target.push(word(zipf.sample(&mut rng)));
                    target.push(word(ranks[i]));
                }
                None => target.push(word(ranks[i])),
            }
            if let Some(e) = errors[i] {
                tags[i] = e;
            }
        }
        let source: Vec<String> = ranks.iter().map(|&r| word(r)).collect();
        for i in 0..len {
            out.trees.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, source[i], heads[i], tags[i]));
        }
        out.trees.push('\n');
        if let (Some(wv), Some(rows)) = (&word_vectors, out.embeddings.as_mut()) {
            let mut v = vec![0.0; wv[0].len()];
            for &r in &ranks {
                for (a, b) in v.iter_mut().zip(&wv[r]) {
                    *a += b;
                }
            }
            rows.push(v);
        }
        out.sources.push(source.join(" "));
        out.targets.push(target.join(" "));
    }
    out
}
