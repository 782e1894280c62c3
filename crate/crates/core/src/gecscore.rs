//! Edit-based GEC evaluation: M2 gold parsing, Levenshtein edit extraction
//! for hypotheses, and corpus-level precision / recall / F0.5.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("M2 block {block}: {reason}")]
    MalformedBlock { block: usize, reason: String },
    #[error("{hypotheses} hypotheses for {golds} gold sentences")]
    LengthMismatch { hypotheses: usize, golds: usize },
}

/// Replace source tokens `start..end` with `replacement` (space-joined
/// tokens, empty for a deletion).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: impl Into<String>) -> Self {
        Self {
            start,
            end,
            replacement: replacement.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub annotator: usize,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Doc {
    pub source_tokens: Vec<String>,
    /// Sorted by annotator id; never empty.
    pub annotations: Vec<Annotation>,
}

impl M2Doc {
    /// Target tokens for one annotator.
    pub fn corrected(&self, annotator_index: usize) -> Vec<String> {
        apply_edits(&self.source_tokens, &self.annotations[annotator_index].edits)
    }
}

/// Parses M2 text: blank-line separated blocks of one `S` line followed by
/// `A start end|||type|||replacement|||required|||comment|||annotator`
/// lines.
pub fn parse_m2(text: &str) -> Result<Vec<M2Doc>, ScoreError> {
    let mut docs = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    for line in text.lines().map(|l| l.trim_end_matches('\r')) {
        if line.trim().is_empty() {
            if !block.is_empty() {
                docs.push(parse_block(&block, docs.len())?);
                block.clear();
            }
        } else {
            block.push(line);
        }
    }
    if !block.is_empty() {
        docs.push(parse_block(&block, docs.len())?);
    }
    Ok(docs)
}

fn parse_block(lines: &[&str], index: usize) -> Result<M2Doc, ScoreError> {
    let bad = |reason: String| ScoreError::MalformedBlock { block: index, reason };
    let source = match lines[0].strip_prefix('S') {
        Some(rest) if rest.is_empty() || rest.starts_with(' ') => rest.trim_start(),
        _ => return Err(bad(format!("expected an S line, found {:?}", lines[0]))),
    };
    let source_tokens: Vec<String> = source.split_whitespace().map(str::to_owned).collect();
    let mut by_annotator: BTreeMap<usize, Vec<Edit>> = BTreeMap::new();
    for line in &lines[1..] {
        let body = line
            .strip_prefix("A ")
            .ok_or_else(|| bad(format!("expected an A line, found {line:?}")))?;
        let fields: Vec<&str> = body.split("|||").collect();
        if fields.len() < 6 {
            return Err(bad(format!("A line has {} fields, expected 6", fields.len())));
        }
        let annotator: usize = fields[5]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad annotator id {:?}", fields[5])))?;
        let mut span = fields[0].split_whitespace();
        let (start, end) = match (span.next(), span.next(), span.next()) {
            (Some(s), Some(e), None) => (s, e),
            _ => return Err(bad(format!("bad span {:?}", fields[0]))),
        };
        let edits = by_annotator.entry(annotator).or_default();
        if (start, end) == ("-1", "-1") || fields[1] == "noop" {
            continue;
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad span {:?}", fields[0])));
        let (start, end) = (parse(start)?, parse(end)?);
        if start > end || end > source_tokens.len() {
            return Err(bad(format!("span {start}..{end} outside {} source tokens", source_tokens.len())));
        }
        let replacement = match fields[2].trim() {
            "-NONE-" => String::new(),
            r => r.split_whitespace().collect::<Vec<_>>().join(" "),
        };
        edits.push(Edit::new(start, end, replacement));
    }
    if by_annotator.is_empty() {
        by_annotator.insert(0, Vec::new());
    }
    let annotations = by_annotator
        .into_iter()
        .map(|(annotator, mut edits)| {
            edits.sort();
            edits.dedup();
            Annotation { annotator, edits }
        })
        .collect();
    Ok(M2Doc {
        source_tokens,
        annotations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Sub,
    Del,
    Ins,
}

fn levenshtein_table<T: PartialEq>(src: &[T], hyp: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (src.len(), hyp.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(src[i - 1] != hyp[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Minimal token edit distance.
pub fn edit_distance<T: PartialEq>(src: &[T], hyp: &[T]) -> usize {
    levenshtein_table(src, hyp)[src.len()][hyp.len()]
}

/// Minimal Levenshtein alignment of `hyp` against `src`, backtraced from the
/// end preferring match, then substitution, deletion, insertion; adjacent
/// non-match operations merge into one span edit.
pub fn extract_edits<S: AsRef<str>>(src: &[S], hyp: &[S]) -> Vec<Edit> {
    let s: Vec<&str> = src.iter().map(AsRef::as_ref).collect();
    let h: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
    let d = levenshtein_table(&s, &h);
    let (mut i, mut j) = (s.len(), h.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let op = if i > 0 && j > 0 && s[i - 1] == h[j - 1] && d[i][j] == d[i - 1][j - 1] {
            Op::Match
        } else if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1 {
            Op::Sub
        } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            Op::Del
        } else {
            Op::Ins
        };
        match op {
            Op::Match | Op::Sub => {
                i -= 1;
                j -= 1;
            }
            Op::Del => i -= 1,
            Op::Ins => j -= 1,
        }
        ops.push(op);
    }
    ops.reverse();

    let mut edits = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut run: Option<(usize, Vec<&str>)> = None;
    for op in ops {
        if op == Op::Match {
            if let Some((start, words)) = run.take() {
                edits.push(Edit::new(start, i, words.join(" ")));
            }
            i += 1;
            j += 1;
            continue;
        }
        let (_, words) = run.get_or_insert_with(|| (i, Vec::new()));
        match op {
            Op::Sub => {
                words.push(h[j]);
                i += 1;
                j += 1;
            }
            Op::Del => i += 1,
            Op::Ins => {
                words.push(h[j]);
                j += 1;
            }
            Op::Match => unreachable!(),
        }
    }
    if let Some((start, words)) = run {
        edits.push(Edit::new(start, i, words.join(" ")));
    }
    edits
}

/// Applies non-overlapping edits (any order) to `src`.
pub fn apply_edits<S: AsRef<str>>(src: &[S], edits: &[Edit]) -> Vec<String> {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut out = Vec::with_capacity(src.len());
    let mut pos = 0;
    for e in sorted {
        out.extend(src[pos..e.start].iter().map(|t| t.as_ref().to_owned()));
        out.extend(e.replacement.split_whitespace().map(str::to_owned));
        pos = pos.max(e.end);
    }
    out.extend(src[pos..].iter().map(|t| t.as_ref().to_owned()));
    out
}

/// `(1 + β²)PR / (β²P + R)`, or 0 when the denominator is 0.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_half: f64,
}

impl ScoreReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f_half: f_beta(precision, recall, 0.5),
        }
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P {:.3} R {:.3} F0.5 {:.3}",
            self.precision, self.recall, self.f_half
        )
    }
}

/// `(tp, fp, fn)` of `hyp` against one gold set; both sorted and distinct.
fn counts(hyp: &[Edit], gold: &[Edit]) -> (usize, usize, usize) {
    let tp = hyp.iter().filter(|e| gold.binary_search(e).is_ok()).count();
    (tp, hyp.len() - tp, gold.len() - tp)
}

/// Per-sentence counts against the annotator with the best sentence F0.5
/// (ties to the lower annotator id).
pub fn sentence_counts(hypothesis: &str, gold: &M2Doc) -> (usize, usize, usize) {
    let hyp_tokens: Vec<&str> = hypothesis.split_whitespace().collect();
    let mut edits = extract_edits(&gold.source_tokens.iter().map(String::as_str).collect::<Vec<_>>(), &hyp_tokens);
    edits.sort();
    edits.dedup();
    let mut best: Option<((usize, usize, usize), f64)> = None;
    for ann in &gold.annotations {
        let c = counts(&edits, &ann.edits);
        let f = ScoreReport::from_counts(c.0, c.1, c.2).f_half;
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((c, f));
        }
    }
    best.map(|b| b.0).unwrap_or((0, edits.len(), 0))
}

/// Corpus-level report from per-sentence best-annotator counts.
pub fn score_corpus<S: AsRef<str>>(hypotheses: &[S], golds: &[M2Doc]) -> Result<ScoreReport, ScoreError> {
    if hypotheses.len() != golds.len() {
        return Err(ScoreError::LengthMismatch {
            hypotheses: hypotheses.len(),
            golds: golds.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (h, g) in hypotheses.iter().zip(golds) {
        let c = sentence_counts(h.as_ref(), g);
        tp += c.0;
        fp += c.1;
        fn_ += c.2;
    }
    Ok(ScoreReport::from_counts(tp, fp, fn_))
}

/// Renders an M2 block with one annotator whose edits turn `source` into
/// `target` (a `noop` line when they are equal).
pub fn m2_block(source: &str, target: &str) -> String {
    let src: Vec<&str> = source.split_whitespace().collect();
    let tgt: Vec<&str> = target.split_whitespace().collect();
    let mut out = format!("S {}\n", src.join(" "));
    let edits = extract_edits(&src, &tgt);
    if edits.is_empty() {
        out.push_str("A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n");
    }
    for e in edits {
        let repl = if e.replacement.is_empty() { "-NONE-" } else { &e.replacement };
        out.push_str(&format!("A {} {}|||UNK|||{}|||REQUIRED|||-NONE-|||0\n", e.start, e.end, repl));
    }
    out
}
