//! Dependency treebank ingestion.
//!
//! Reads parser output in CoNLL-U (10 columns) or a minimal 4-column
//! `ID FORM HEAD DEPREL` layout and aligns it with a parallel
//! source/target corpus. Only the dependency label of each node is used by
//! the similarity measures; error-aware parsers mark erroneous tokens with
//! the labels `S` (substituted), `R` (redundant) and `M` (missing).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Labels that carry grammatical-error information.
pub const ERROR_LABELS: [&str; 3] = ["S", "R", "M"];

/// Index of a label inside a [`LabelVocab`].
pub type LabelId = u32;

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("sentence {sentence}: dependency graph contains a cycle")]
    CyclicTree { sentence: usize },
    #[error("sentence {sentence}: {count} nodes attach to head 0")]
    MultipleRoots { sentence: usize, count: usize },
    #[error("sentence {sentence}: token {index} is missing")]
    MissingToken { sentence: usize, index: usize },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("embedding line {line}: dimension {found}, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line} is empty")]
    EmptyLine { path: String, line: usize },
    #[error("example {example}: tree has {tree} tokens but the source has {source_len}")]
    TokenCountMismatch {
        example: usize,
        tree: usize,
        source_len: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered set of dependency labels shared by every tree of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelVocab {
    labels: Vec<String>,
    index: HashMap<String, LabelId>,
}

impl LabelVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::new();
        for l in labels {
            vocab.intern(l.as_ref());
        }
        vocab
    }

    /// Returns the id of `label`, adding it at the end when unseen.
    pub fn intern(&mut self, label: &str) -> LabelId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as LabelId;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<LabelId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: LabelId) -> &str {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of distinct labels (`d`).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_error_label(&self, id: LabelId) -> bool {
        ERROR_LABELS.contains(&self.label(id))
    }

    /// Ids of the error labels present in this vocabulary.
    pub fn error_labels(&self) -> Vec<LabelId> {
        ERROR_LABELS.iter().filter_map(|l| self.get(l)).collect()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for l in &self.labels {
            h.update(l.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepNode {
    /// 1-based position in the sentence.
    pub token_index: usize,
    pub form: String,
    pub label: LabelId,
    /// Node indices (0-based) of the children, ascending by token index.
    pub children: Vec<usize>,
}

impl DepNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A dependency tree stored as an arena; node `i` is token `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    nodes: Vec<DepNode>,
    root: usize,
    pub sentence_id: usize,
}

impl DepTree {
    /// Builds a tree from 1-based head indices (0 marks the root).
    pub fn from_heads(
        sentence_id: usize,
        forms: Vec<String>,
        heads: &[usize],
        labels: &[LabelId],
    ) -> Result<Self, TreebankError> {
        let n = heads.len();
        assert_eq!(forms.len(), n);
        assert_eq!(labels.len(), n);
        if n == 0 {
            return Err(TreebankError::MissingToken {
                sentence: sentence_id,
                index: 1,
            });
        }

        let roots: Vec<usize> = (0..n).filter(|&i| heads[i] == 0).collect();
        if let Some(&bad) = heads.iter().find(|&&h| h > n) {
            return Err(TreebankError::MissingToken {
                sentence: sentence_id,
                index: bad,
            });
        }
        if roots.is_empty() {
            // n nodes with n parent edges and no root always close a cycle
            return Err(TreebankError::CyclicTree {
                sentence: sentence_id,
            });
        }
        if roots.len() > 1 {
            return Err(TreebankError::MultipleRoots {
                sentence: sentence_id,
                count: roots.len(),
            });
        }

        let mut nodes: Vec<DepNode> = forms
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (form, &label))| DepNode {
                token_index: i + 1,
                form,
                label,
                children: Vec::new(),
            })
            .collect();
        for (i, &h) in heads.iter().enumerate() {
            if h != 0 {
                nodes[h - 1].children.push(i);
            }
        }

        let root = roots[0];
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        let mut reached = 0;
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(TreebankError::CyclicTree {
                    sentence: sentence_id,
                });
            }
            seen[i] = true;
            reached += 1;
            stack.extend(nodes[i].children.iter().copied());
        }
        if reached != n {
            return Err(TreebankError::CyclicTree {
                sentence: sentence_id,
            });
        }

        Ok(Self {
            nodes,
            root,
            sentence_id,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &DepNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[DepNode] {
        &self.nodes
    }

    pub fn n_tokens(&self) -> usize {
        self.nodes.len()
    }

    /// 1-based heads, 0 for the root.
    pub fn heads(&self) -> Vec<usize> {
        let mut heads = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                heads[c] = i + 1;
            }
        }
        heads
    }

    pub fn contains_label(&self, label: LabelId) -> bool {
        self.nodes.iter().any(|n| n.label == label)
    }

    /// Applies `f` to every label, keeping the structure.
    pub fn relabel(&self, f: impl Fn(LabelId) -> LabelId) -> Self {
        let mut out = self.clone();
        for node in &mut out.nodes {
            node.label = f(node.label);
        }
        out
    }

    /// Serializes to the 4-column `ID FORM HEAD DEPREL` layout, one
    /// tab-separated line per token, with a trailing newline.
    pub fn to_conll(&self, vocab: &LabelVocab) -> String {
        let heads = self.heads();
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                i + 1,
                node.form,
                heads[i],
                vocab.label(node.label)
            );
        }
        out
    }
}

/// `(number of children, number of descendants)` of `node`.
pub fn subtree_stats(tree: &DepTree, node: usize) -> (usize, usize) {
    let n_children = tree.node(node).children.len();
    let mut descendants = 0;
    let mut stack: Vec<usize> = tree.node(node).children.clone();
    while let Some(i) = stack.pop() {
        descendants += 1;
        stack.extend(tree.node(i).children.iter().copied());
    }
    (n_children, descendants)
}

struct Row {
    id: usize,
    form: String,
    head: usize,
    label: String,
}

fn parse_row(line: &str, lineno: usize) -> Result<Option<Row>, TreebankError> {
    let cols: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    };
    let (id, form, head, label) = match cols.len() {
        4 => (cols[0], cols[1], cols[2], cols[3]),
        n if n >= 10 => (cols[0], cols[1], cols[6], cols[7]),
        n => {
            return Err(TreebankError::MalformedLine {
                line: lineno,
                reason: format!("expected 4 or at least 10 columns, found {n}"),
            })
        }
    };
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    let id: usize = id.parse().map_err(|_| TreebankError::MalformedLine {
        line: lineno,
        reason: format!("non-integer ID {id:?}"),
    })?;
    let head: usize = head.parse().map_err(|_| TreebankError::MalformedLine {
        line: lineno,
        reason: format!("non-integer HEAD {head:?}"),
    })?;
    if label.is_empty() {
        return Err(TreebankError::MalformedLine {
            line: lineno,
            reason: "empty DEPREL".into(),
        });
    }
    Ok(Some(Row {
        id,
        form: form.to_owned(),
        head,
        label: label.to_owned(),
    }))
}

fn build_block(
    rows: Vec<Row>,
    sentence: usize,
    vocab: &mut LabelVocab,
) -> Result<DepTree, TreebankError> {
    let mut rows = rows;
    rows.sort_by_key(|r| r.id);
    for (i, r) in rows.iter().enumerate() {
        if r.id != i + 1 {
            return Err(TreebankError::MissingToken {
                sentence,
                index: i + 1,
            });
        }
    }
    let heads: Vec<usize> = rows.iter().map(|r| r.head).collect();
    let labels: Vec<LabelId> = rows.iter().map(|r| vocab.intern(&r.label)).collect();
    let forms = rows.into_iter().map(|r| r.form).collect();
    DepTree::from_heads(sentence, forms, &heads, &labels)
}

/// Parses blank-line separated blocks into trees, extending `vocab` with
/// unseen labels. Lines are split on tabs; a line without any tab is split
/// on whitespace instead.
pub fn parse_conllu(text: &str, vocab: &mut LabelVocab) -> Result<Vec<DepTree>, TreebankError> {
    let mut trees = Vec::new();
    let mut rows = Vec::new();
    let mut in_block = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if in_block {
                trees.push(build_block(std::mem::take(&mut rows), trees.len(), vocab)?);
                in_block = false;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        in_block = true;
        if let Some(row) = parse_row(line, i + 1)? {
            rows.push(row);
        }
    }
    if in_block {
        trees.push(build_block(rows, trees.len(), vocab)?);
    }
    Ok(trees)
}

/// One aligned training or test instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: usize,
    pub source: String,
    pub target: String,
    pub source_tokens: Vec<String>,
    pub tree: DepTree,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub examples: Vec<Example>,
    pub vocab: LabelVocab,
    pub embedding_dim: Option<usize>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Aligns in-memory sources, targets, treebank text and optional
    /// embedding rows. `vocab` is extended and stored on the corpus.
    pub fn from_parts(
        sources: Vec<String>,
        targets: Vec<String>,
        trees_text: &str,
        embeddings: Option<Vec<Vec<f64>>>,
        mut vocab: LabelVocab,
    ) -> Result<Self, TreebankError> {
        if let Some(line) = sources.iter().position(|s| s.trim().is_empty()) {
            return Err(TreebankError::EmptyLine {
                path: "source".into(),
                line: line + 1,
            });
        }
        check_len("target sentences", sources.len(), targets.len())?;
        let trees = parse_conllu(trees_text, &mut vocab)?;
        check_len("tree blocks", sources.len(), trees.len())?;

        let mut embedding_dim = None;
        if let Some(rows) = &embeddings {
            check_len("embedding rows", sources.len(), rows.len())?;
            embedding_dim = Some(check_dims(rows)?);
        }

        let mut emb_iter = embeddings.map(Vec::into_iter);
        let mut examples = Vec::with_capacity(sources.len());
        for (id, ((source, target), tree)) in sources.into_iter().zip(targets).zip(trees).enumerate() {
            let source_tokens: Vec<String> = source.split_whitespace().map(str::to_owned).collect();
            if tree.n_tokens() != source_tokens.len() {
                return Err(TreebankError::TokenCountMismatch {
                    example: id,
                    tree: tree.n_tokens(),
                    source_len: source_tokens.len(),
                });
            }
            examples.push(Example {
                id,
                source,
                target,
                source_tokens,
                tree,
                embedding: emb_iter.as_mut().and_then(Iterator::next),
            });
        }
        Ok(Self {
            examples,
            vocab,
            embedding_dim,
        })
    }

    /// Hash over every byte that selection depends on.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for ex in &self.examples {
            h.update(ex.source.as_bytes());
            h.update([0u8]);
            h.update(ex.target.as_bytes());
            h.update([0u8]);
            h.update(ex.tree.to_conll(&self.vocab).as_bytes());
            if let Some(e) = &ex.embedding {
                for v in e {
                    h.update(v.to_le_bytes());
                }
            }
            h.update([1u8]);
        }
        hex::encode(h.finalize())
    }

    /// Replaces the vocabulary with `vocab`, which must be a superset
    /// (prefix-compatible extension) of the current one.
    pub fn adopt_vocab(&mut self, vocab: &LabelVocab) {
        debug_assert!(self.vocab.labels().iter().zip(vocab.labels()).all(|(a, b)| a == b));
        self.vocab = vocab.clone();
    }
}

fn check_len(what: &str, expected: usize, found: usize) -> Result<(), TreebankError> {
    if expected != found {
        return Err(TreebankError::LengthMismatch {
            what: what.into(),
            expected,
            found,
        });
    }
    Ok(())
}

fn check_dims(rows: &[Vec<f64>]) -> Result<usize, TreebankError> {
    let dim = rows.first().map_or(0, Vec::len);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(TreebankError::DimensionMismatch {
                line: i + 1,
                expected: dim,
                found: r.len(),
            });
        }
    }
    Ok(dim)
}

fn read(path: &Path) -> Result<String, TreebankError> {
    fs::read_to_string(path).map_err(|source| TreebankError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parses an embedding file: one vector per line, space-separated reals.
pub fn parse_embeddings(text: &str) -> Result<Vec<Vec<f64>>, TreebankError> {
    let rows = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| TreebankError::MalformedLine {
                        line: i + 1,
                        reason: format!("not a number: {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_dims(&rows)?;
    Ok(rows)
}

/// Reads sentence-per-line text, rejecting empty lines.
pub fn read_sentences(path: &Path) -> Result<Vec<String>, TreebankError> {
    let text = read(path)?;
    let lines: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect();
    if let Some(i) = lines.iter().position(|l| l.trim().is_empty()) {
        return Err(TreebankError::EmptyLine {
            path: path.display().to_string(),
            line: i + 1,
        });
    }
    Ok(lines)
}

pub fn load_corpus(
    source_path: &Path,
    target_path: &Path,
    trees_path: &Path,
    embeddings_path: Option<&Path>,
) -> Result<Corpus, TreebankError> {
    load_corpus_with_vocab(source_path, target_path, trees_path, embeddings_path, LabelVocab::new())
}

/// Like [`load_corpus`], extending an existing vocabulary so that several
/// corpora share label ids.
pub fn load_corpus_with_vocab(
    source_path: &Path,
    target_path: &Path,
    trees_path: &Path,
    embeddings_path: Option<&Path>,
    vocab: LabelVocab,
) -> Result<Corpus, TreebankError> {
    let sources = read_sentences(source_path)?;
    let targets: Vec<String> = read(target_path)?
        .lines()
        .map(|l| l.trim_end_matches('\r').to_owned())
        .collect();
    let trees = read(trees_path)?;
    let embeddings = embeddings_path
        .map(|p| read(p).and_then(|t| parse_embeddings(&t)))
        .transpose()?;
    Corpus::from_parts(sources, targets, &trees, embeddings, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG_2A: &str = "1\tBut\t3\tcc\n2\tthere\t3\texpl\n3\twere\t0\tRoot\n\
                                     4\tno\t5\tdet\n5\tbuyers\t3\tnsubj\n6\t.\t3\tpunct\n";

    #[test]
    fn parses_correct_sentence_tree() {
        let mut vocab = LabelVocab::new();
        let trees = parse_conllu(FIG_2A, &mut vocab).unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.n_tokens(), 6);
        assert_eq!(t.root(), 2);
        assert_eq!(vocab.label(t.node(t.root()).label), "Root");
        let kids: Vec<&str> = t.node(t.root()).children.iter().map(|&c| t.node(c).form.as_str()).collect();
        assert_eq!(kids, ["But", "there", "buyers", "."]);
        assert_eq!(t.node(4).children, vec![3]);
        assert_eq!(vocab.len(), 6);
        assert_eq!(subtree_stats(t, t.root()), (4, 5));
    }

    #[test]
    fn lone_root() {
        let mut vocab = LabelVocab::new();
        let trees = parse_conllu("1\tHello\t0\tRoot\n", &mut vocab).unwrap();
        assert_eq!(trees[0].n_tokens(), 1);
        assert!(trees[0].node(0).is_leaf());
        assert_eq!(subtree_stats(&trees[0], 0), (0, 0));
    }

    #[test]
    fn mutual_heads_rejected() {
        let mut vocab = LabelVocab::new();
        let err = parse_conllu("1\ta\t2\tx\n2\tb\t1\tx\n", &mut vocab).unwrap_err();
        assert!(matches!(err, TreebankError::CyclicTree { .. }));
    }

    #[test]
    fn cycle_detached_from_root() {
        let mut vocab = LabelVocab::new();
        let text = "1\ta\t0\tRoot\n2\tb\t3\tx\n3\tc\t2\tx\n";
        assert!(matches!(
            parse_conllu(text, &mut vocab),
            Err(TreebankError::CyclicTree { .. })
        ));
    }

    #[test]
    fn two_roots_rejected() {
        let mut vocab = LabelVocab::new();
        let err = parse_conllu("1\ta\t0\tRoot\n2\tb\t0\tRoot\n", &mut vocab).unwrap_err();
        assert!(matches!(err, TreebankError::MultipleRoots { count: 2, .. }));
    }

    #[test]
    fn gap_in_ids_is_missing_token() {
        let mut vocab = LabelVocab::new();
        let err = parse_conllu("1\ta\t0\tRoot\n3\tb\t1\tx\n", &mut vocab).unwrap_err();
        assert!(matches!(err, TreebankError::MissingToken { index: 2, .. }));
    }

    #[test]
    fn malformed_lines() {
        let mut vocab = LabelVocab::new();
        assert!(matches!(
            parse_conllu("1\ta\t0\n", &mut vocab),
            Err(TreebankError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_conllu("1\ta\t_\tRoot\n", &mut vocab),
            Err(TreebankError::MalformedLine { .. })
        ));
    }

    #[test]
    fn conllu_ten_columns_comments_and_multiword() {
        let text = "# sent_id = 1\n\
                    1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
                    1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n\
                    2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
                    3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n\
                    3.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\r\n\
                    \r\n\
                    1\tyes\t0\troot\n";
        let mut vocab = LabelVocab::new();
        let trees = parse_conllu(text, &mut vocab).unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].n_tokens(), 3);
        assert_eq!(trees[1].sentence_id, 1);
        assert_eq!(vocab.labels(), ["aux", "advmod", "root"]);
    }

    #[test]
    fn serialization_round_trip() {
        let mut vocab = LabelVocab::new();
        let t = parse_conllu(FIG_2A, &mut vocab).unwrap().remove(0);
        let text = t.to_conll(&vocab);
        assert_eq!(text, FIG_2A);
        let again = parse_conllu(&text, &mut vocab).unwrap().remove(0);
        assert_eq!(t, again);
    }

    #[test]
    fn error_labels() {
        let vocab = LabelVocab::from_labels(["det", "S", "nsubj", "M"]);
        assert_eq!(vocab.error_labels(), vec![1, 3]);
        assert!(vocab.is_error_label(1));
        assert!(!vocab.is_error_label(0));
    }

    #[test]
    fn corpus_alignment() {
        let trees = "1\ta\t0\tRoot\n\n1\tb\t0\tRoot\n2\tc\t1\tdet\n\n1\td\t0\tRoot\n";
        let c = Corpus::from_parts(
            vec!["a".into(), "b c".into(), "d".into()],
            vec!["A".into(), "B C".into(), "D".into()],
            trees,
            None,
            LabelVocab::new(),
        )
        .unwrap();
        assert_eq!(c.examples.iter().map(|e| e.id).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(c.examples[1].source_tokens, ["b", "c"]);
    }

    #[test]
    fn corpus_length_and_dimension_errors() {
        let trees = "1\ta\t0\tRoot\n\n1\tb\t0\tRoot\n\n1\td\t0\tRoot\n";
        let three = || vec!["a".to_string(), "b".into(), "d".into()];
        let err = Corpus::from_parts(three(), vec!["A".into(), "B".into()], trees, None, LabelVocab::new())
            .unwrap_err();
        assert!(matches!(
            err,
            TreebankError::LengthMismatch { expected: 3, found: 2, .. }
        ));
        let emb = vec![vec![1.0; 4], vec![1.0; 5], vec![1.0; 4]];
        let err = Corpus::from_parts(three(), three(), trees, Some(emb), LabelVocab::new()).unwrap_err();
        assert!(matches!(
            err,
            TreebankError::DimensionMismatch { expected: 4, found: 5, .. }
        ));
    }

    #[test]
    fn empty_source_line_rejected() {
        let err = Corpus::from_parts(
            vec!["a".into(), " ".into()],
            vec!["a".into(), "b".into()],
            "1\ta\t0\tRoot\n\n1\tb\t0\tRoot\n",
            None,
            LabelVocab::new(),
        )
        .unwrap_err();
        assert!(matches!(err, TreebankError::EmptyLine { line: 2, .. }));
    }

    #[test]
    fn token_count_must_match_tree() {
        let err = Corpus::from_parts(
            vec!["a b".into()],
            vec!["a b".into()],
            "1\ta\t0\tRoot\n",
            None,
            LabelVocab::new(),
        )
        .unwrap_err();
        assert!(matches!(err, TreebankError::TokenCountMismatch { .. }));
    }

    #[test]
    fn embeddings_parse() {
        let rows = parse_embeddings("1 2 3\n0.5 -1 2e-3\n").unwrap();
        assert_eq!(rows[1], vec![0.5, -1.0, 0.002]);
        assert!(parse_embeddings("1 x\n").is_err());
    }
}
