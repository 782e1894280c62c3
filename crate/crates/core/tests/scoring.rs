//! Corpus scoring against a hand-written multi-annotator M2 file.

use syntaxicl::gecscore::{m2_block, parse_m2, score_corpus, ScoreError};

const M2: &str = "\
S She go to school every days .
A 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0
A 5 6|||R:NOUN:NUM|||day|||REQUIRED|||-NONE-|||0
A 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||1
A 4 6|||R:ADV|||daily|||REQUIRED|||-NONE-|||1

S No smoking in the public places .
A 3 4|||U:DET|||-NONE-|||REQUIRED|||-NONE-|||0

S This is fine .
A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0
";

fn golds() -> Vec<syntaxicl::M2Doc> {
    parse_m2(M2).unwrap()
}

#[test]
fn gold_applied_hypotheses_are_perfect() {
    let g = golds();
    let hyp: Vec<String> = g.iter().map(|d| d.corrected(0).join(" ")).collect();
    let r = score_corpus(&hyp, &g).unwrap();
    assert_eq!((r.tp, r.fp, r.fn_), (3, 0, 0));
    assert_eq!((r.precision, r.recall, r.f_half), (1.0, 1.0, 1.0));
    assert_eq!(r.to_string(), "P 1.000 R 1.000 F0.5 1.000");

    // the second annotator's correction is equally perfect for sentence 0
    let mut alt = hyp.clone();
    alt[0] = g[0].corrected(1).join(" ");
    assert_eq!(alt[0], "She goes to school daily .");
    assert_eq!(score_corpus(&alt, &g).unwrap().f_half, 1.0);
}

#[test]
fn unchanged_hypotheses_have_zero_recall() {
    let g = golds();
    let hyp: Vec<String> = g.iter().map(|d| d.source_tokens.join(" ")).collect();
    let r = score_corpus(&hyp, &g).unwrap();
    assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 3));
    assert_eq!(r.recall, 0.0);
}

#[test]
fn partial_hypotheses_count_by_hand() {
    let g = golds();
    // sentence 0: one correct edit and one wrong one against either
    // annotator (annotator 0 preferred on the tie); sentence 1: a spurious
    // edit; sentence 2: unchanged
    let hyp = ["She goes to school every dayz .", "No smoking in the public place .", "This is fine ."];
    let r = score_corpus(&hyp, &g).unwrap();
    // s0: hyp {1-2 goes, 5-6 dayz}; ann0 {1-2 goes, 5-6 day} -> 1/1/1
    // s1: hyp {5-6 place}; gold {3-4 ""} -> 0/1/1
    assert_eq!((r.tp, r.fp, r.fn_), (1, 2, 2));
    let (p, rc) = (1.0 / 3.0, 1.0 / 3.0);
    assert!((r.precision - p).abs() < 1e-12 && (r.recall - rc).abs() < 1e-12);
    assert!((r.f_half - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn adjacent_gold_edits_are_merged_in_hypotheses() {
    // plain Levenshtein extraction merges the run 1..3 into one edit, so a
    // gold file that splits it cannot be matched
    let g = parse_m2(
        "S I has a apple .\n\
         A 1 2|||R:VERB:SVA|||have|||REQUIRED|||-NONE-|||0\n\
         A 2 3|||R:DET|||an|||REQUIRED|||-NONE-|||0\n",
    )
    .unwrap();
    let r = score_corpus(&["I have an apple ."], &g).unwrap();
    assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 2));
}

#[test]
fn misaligned_inputs_are_rejected() {
    let err = score_corpus(&["only one"], &golds()).unwrap_err();
    assert!(matches!(err, ScoreError::LengthMismatch { hypotheses: 1, golds: 3 }));
}

#[test]
fn generated_blocks_round_trip() {
    let pairs = [
        ("a b c", "a x c"),
        ("same here", "same here"),
        ("drop me now", "drop now"),
        ("add", "add more words"),
    ];
    let text: String = pairs.iter().map(|(s, t)| m2_block(s, t) + "\n").collect();
    let g = parse_m2(&text).unwrap();
    for (d, (_, t)) in g.iter().zip(&pairs) {
        assert_eq!(d.corrected(0).join(" "), *t);
    }
    let hyp: Vec<&str> = pairs.iter().map(|p| p.1).collect();
    assert_eq!(score_corpus(&hyp, &g).unwrap().f_half, 1.0);
}
