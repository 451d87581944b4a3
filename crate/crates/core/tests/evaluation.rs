use std::collections::BTreeSet;

use proptest::prelude::*;

use jatrans::align::{three_way, AlignmentCost};
use jatrans::correct::IdentityBackend;
use jatrans::corpus::ingest_str;
use jatrans::eval::{
    exact_match_accuracy, extract_edits, m2_score, parse_m2, word_accuracy, write_m2, AccuracyScope, Counts,
    EditSpan, M2Sentence, ScoreReport,
};
use jatrans::mapping::{default_mapping, TranslitMode};
use jatrans::pipeline::{run_pipeline, PipelineConfig};

const SOURCE: &str = "קאל אלכׄזרי, וכיף דׄלך והברכות כלפה זאידה.";
const REFERENCE: &str = "قال الخزري: وكيف ذلك والتسبيحات كلفة زائدة.";

#[test]
fn seven_ja_words_four_exact_matches() {
    let corpus = ingest_str(SOURCE, REFERENCE, &BTreeSet::new(), None).unwrap().corpus;
    let rows = three_way(&corpus, &default_mapping(), &AlignmentCost::default()).rows;
    let dotted = exact_match_accuracy(&rows, TranslitMode::Dotted).unwrap();
    assert_eq!((dotted.counts.matched_words, dotted.counts.eval_words), (4, 7));
    let dotless = exact_match_accuracy(&rows, TranslitMode::Dotless).unwrap();
    assert_eq!((dotless.counts.matched_words, dotless.counts.eval_words), (2, 7));

    // the same counts through the generic word-accuracy path
    let column: Vec<&str> = rows.iter().map(|r| r.hypothesis_dotted.as_str()).collect();
    assert_eq!(word_accuracy(&rows, &column, AccuracyScope::JaOnly).unwrap(), dotted);
}

#[test]
fn micro_aggregation_over_concatenated_corpora() {
    let a = ("קאל אלכזרי\nפיציר ענדנא מרה\n", "فقال الخزري\nفيصير عندنا مرة\n");
    let b = ("וכיף דלך כלפה\n", "وكيف ذلك كلفة زائدة\n");
    let cfg = PipelineConfig::default();
    let run = |src: &str, reference: &str| {
        let corpus = ingest_str(src, reference, &BTreeSet::new(), None).unwrap().corpus;
        run_pipeline(&corpus, &cfg, Some(&IdentityBackend)).unwrap()
    };
    let (ra, rb) = (run(a.0, a.1), run(b.0, b.1));
    let both = run(&format!("{}{}", a.0, b.0), &format!("{}{}", a.1, b.1));
    assert_eq!(both.m2.counts, ra.m2.counts + rb.m2.counts);
    let acc = |r: &jatrans::pipeline::PipelineReport| r.translit_dotted.unwrap().counts;
    assert_eq!(acc(&both), acc(&ra) + acc(&rb));
    assert_eq!(both.m2, ScoreReport::from_counts(ra.m2.counts + rb.m2.counts));
}

#[test]
fn gold_m2_file_round_trips() {
    let corpus = ingest_str(SOURCE, REFERENCE, &BTreeSet::new(), None).unwrap().corpus;
    let report = run_pipeline(&corpus, &PipelineConfig::default(), None).unwrap();
    let text = write_m2(&report.gold);
    assert_eq!(parse_m2(&text).unwrap(), report.gold);
    assert!(text.starts_with("S قال الخزري , وكيف ذلك وهبركوت كلفه زايده .\n"));
}

fn tokens() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(prop::sample::select(vec!["a", "b", "ab", "ba", "abc", "c"]), 0..8)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn identical_edit_sets_score_perfectly(src in tokens(), tgt in tokens()) {
        let edits = extract_edits(&src, &tgt);
        prop_assume!(!edits.is_empty());
        let r = m2_score(&edits, &edits).unwrap();
        prop_assert_eq!((r.precision, r.recall, r.f1, r.f_half), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn equal_precision_and_recall_fix_both_f_scores(matched in 0usize..40, total in 1usize..40) {
        prop_assume!(matched <= total);
        let r = ScoreReport::from_counts(Counts {
            matched_edits: matched,
            system_edits: total,
            gold_edits: total,
            ..Counts::default()
        });
        prop_assert!((r.f1 - r.precision).abs() < 1e-12);
        prop_assert!((r.f_half - r.precision).abs() < 1e-12);
    }

    #[test]
    fn m2_text_round_trips(src in tokens(), tgt in tokens()) {
        prop_assume!(!src.is_empty());
        let sentence = M2Sentence { edits: extract_edits(&src, &tgt), source: src };
        let parsed = parse_m2(&write_m2(std::slice::from_ref(&sentence))).unwrap();
        prop_assert_eq!(parsed, vec![sentence]);
    }

    #[test]
    fn edits_are_sorted_and_disjoint(src in tokens(), tgt in tokens()) {
        let edits = extract_edits(&src, &tgt);
        for w in edits.windows(2) {
            // maximal runs are separated by at least one unchanged token
            prop_assert!(w[0].end < w[1].start);
        }
        prop_assert!(edits.iter().all(|e: &EditSpan| e.end <= src.len()));
    }
}
