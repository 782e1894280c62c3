//! Shared fixtures for the binary's tests: a small parallel corpus with
//! hand-written parses, bundle plumbing and process helpers.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_syntaxicl");

/// A sentence template: erroneous source, corrected target, and the parse
/// of the source as `(head, label)` per token. `{}` is the filler slot.
struct Template {
    source: &'static str,
    target: &'static str,
    parse: &'static [(usize, &'static str)],
}

const TEMPLATES: [Template; 6] = [
    Template {
        source: "she has a {} .",
        target: "she has an {} .",
        parse: &[(2, "nsubj"), (0, "Root"), (4, "S"), (2, "obj"), (2, "punct")],
    },
    Template {
        source: "he go to the {} every day .",
        target: "he goes to the {} every day .",
        parse: &[(2, "nsubj"), (0, "Root"), (5, "case"), (5, "det"), (2, "obl"), (7, "det"), (2, "obl:tmod"), (2, "punct")],
    },
    Template {
        source: "we like the {} very much much .",
        target: "we like the {} very much .",
        parse: &[(2, "nsubj"), (0, "Root"), (4, "det"), (2, "obj"), (6, "advmod"), (2, "advmod"), (2, "R"), (2, "punct")],
    },
    Template {
        source: "they went {} yesterday .",
        target: "they went to {} yesterday .",
        parse: &[(2, "nsubj"), (0, "Root"), (2, "M"), (2, "advmod"), (2, "punct")],
    },
    Template {
        source: "the {} is on table .",
        target: "the {} is on the table .",
        parse: &[(2, "det"), (3, "nsubj"), (0, "Root"), (5, "case"), (3, "M"), (3, "punct")],
    },
    Template {
        source: "i read a {} last night .",
        target: "i read a {} last night .",
        parse: &[(2, "nsubj"), (0, "Root"), (4, "det"), (2, "obj"), (6, "amod"), (2, "obl:tmod"), (2, "punct")],
    },
];

const FILLERS: [&str; 12] = [
    "apple", "book", "letter", "school", "garden", "market", "umbrella", "museum", "river", "story", "kitchen", "office",
];

pub struct ToyCorpus {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub trees: String,
}

/// `n` aligned pairs cycling through the templates and fillers. Each
/// sentence gets a distinct filler/template combination for `n` <= 72.
pub fn toy_corpus(n: usize) -> ToyCorpus {
    let mut c = ToyCorpus {
        sources: Vec::new(),
        targets: Vec::new(),
        trees: String::new(),
    };
    for i in 0..n {
        let t = &TEMPLATES[i % TEMPLATES.len()];
        let w = FILLERS[(i / TEMPLATES.len() + i) % FILLERS.len()];
        let source = t.source.replace("{}", w);
        for (k, (tok, (head, label))) in source.split(' ').zip(t.parse).enumerate() {
            let _ = writeln!(c.trees, "{}\t{tok}\t{head}\t{label}", k + 1);
        }
        c.trees.push('\n');
        assert_eq!(source.split(' ').count(), t.parse.len(), "template {}", i % TEMPLATES.len());
        c.sources.push(source);
        c.targets.push(t.target.replace("{}", w));
    }
    c
}

impl ToyCorpus {
    /// Writes src/tgt/trees files into `dir`, returning their paths.
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        fs::create_dir_all(dir).unwrap();
        let paths = (dir.join("src.txt"), dir.join("tgt.txt"), dir.join("trees.conllu"));
        fs::write(&paths.0, self.sources.join("\n") + "\n").unwrap();
        fs::write(&paths.1, self.targets.join("\n") + "\n").unwrap();
        fs::write(&paths.2, &self.trees).unwrap();
        paths
    }

    pub fn m2(&self) -> String {
        self.sources
            .iter()
            .zip(&self.targets)
            .map(|(s, t)| syntaxicl::gecscore::m2_block(s, t) + "\n")
            .collect()
    }
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Runs the binary and asserts the exit code, returning stdout.
pub fn expect(args: &[&str], code: i32) -> (String, String) {
    let out = run(args);
    let (so, se) = (String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned());
    assert_eq!(out.status.code(), Some(code), "args {args:?}\nstdout: {so}\nstderr: {se}");
    (so, se)
}

/// Writes the corpus and ingests it into `dir/bundle`.
pub fn ingest(c: &ToyCorpus, dir: &Path) -> PathBuf {
    let (s, t, tr) = c.write(&dir.join("raw"));
    let bundle = dir.join("bundle");
    expect(&["ingest", "--src", p(&s), "--tgt", p(&t), "--trees", p(&tr), "--out", p(&bundle)], 0);
    bundle
}
