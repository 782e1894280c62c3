//! Corpus bundles: a directory holding validated, normalized corpus files
//! plus a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use syntaxicl::treebank::{load_corpus, load_corpus_with_vocab, Corpus, LabelVocab};

use crate::manifest::{create_dir, Manifest};

pub const SOURCE: &str = "source.txt";
pub const TARGET: &str = "target.txt";
pub const TREES: &str = "trees.conllu";
pub const EMBEDDINGS: &str = "embeddings.txt";

#[derive(Debug, Serialize)]
pub struct IngestConfig<'a> {
    pub src: &'a Path,
    pub tgt: &'a Path,
    pub trees: &'a Path,
    pub embeddings: Option<&'a Path>,
    pub examples: usize,
    pub labels: &'a [String],
    pub embedding_dim: Option<usize>,
}

/// Validates the inputs and writes the bundle into `out`.
pub fn ingest(src: &Path, tgt: &Path, trees: &Path, embeddings: Option<&Path>, out: &Path) -> Result<Corpus> {
    let corpus = load_corpus(src, tgt, trees, embeddings)?;
    create_dir(out)?;
    let write = |name: &str, text: String| -> Result<String> {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(name.to_owned())
    };
    let mut outputs = vec![
        write(SOURCE, lines(corpus.examples.iter().map(|e| e.source.as_str())))?,
        write(TARGET, lines(corpus.examples.iter().map(|e| e.target.as_str())))?,
        write(TREES, corpus.examples.iter().map(|e| e.tree.to_conll(&corpus.vocab) + "\n").collect())?,
    ];
    if corpus.embedding_dim.is_some() {
        let mut text = String::new();
        for e in &corpus.examples {
            let row = e.embedding.as_ref().expect("aligned embeddings");
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            let _ = writeln!(text, "{}", cells.join(" "));
        }
        outputs.push(write(EMBEDDINGS, text)?);
    }

    let config = IngestConfig {
        src,
        tgt,
        trees,
        embeddings,
        examples: corpus.len(),
        labels: corpus.vocab.labels(),
        embedding_dim: corpus.embedding_dim,
    };
    let mut m = Manifest::new("ingest", &config)?;
    m.input_file("src", src)?.input_file("tgt", tgt)?.input_file("trees", trees)?;
    if let Some(p) = embeddings {
        m.input_file("embeddings", p)?;
    }
    m.input("corpus", corpus.content_hash());
    m.write(out, &outputs)?;
    Ok(corpus)
}

fn lines<'a>(it: impl Iterator<Item = &'a str>) -> String {
    it.map(|s| s.to_owned() + "\n").collect()
}

fn embeddings_path(dir: &Path) -> Option<PathBuf> {
    let p = dir.join(EMBEDDINGS);
    p.exists().then_some(p)
}

pub fn load(dir: &Path, vocab: LabelVocab) -> Result<Corpus> {
    let emb = embeddings_path(dir);
    load_corpus_with_vocab(&dir.join(SOURCE), &dir.join(TARGET), &dir.join(TREES), emb.as_deref(), vocab)
        .with_context(|| format!("loading bundle {}", dir.display()))
}

/// Loads training and test bundles over one shared label vocabulary.
pub fn load_pair(train_dir: &Path, test_dir: &Path) -> Result<(Corpus, Corpus)> {
    let mut train = load(train_dir, LabelVocab::new())?;
    let test = load(test_dir, train.vocab.clone())?;
    train.adopt_vocab(&test.vocab);
    Ok((train, test))
}
