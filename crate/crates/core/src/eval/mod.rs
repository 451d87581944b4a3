//! Scoring: exact-match transliteration accuracy, MaxMatch-style edit
//! precision/recall/F, and the error-category report.

mod edits;
mod errors;

pub use edits::{
    apply_edits, extract_edits, m2_counts, m2_score, parse_m2, project_onto_source, write_m2,
    EditSpan, M2Sentence,
};
pub use errors::{
    classify_error, classify_errors, collapse_alif_hamza, error_rows_tsv, parse_error_rows,
    ErrorCategory, ErrorRow,
};

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::AlignmentRow;
use crate::corpus::Label;
use crate::mapping::TranslitMode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no rows qualify for evaluation")]
    NoEvaluableRows,
    #[error("edits {first} and {second} overlap")]
    OverlappingEdits { first: EditSpan, second: EditSpan },
    #[error("edit {0} lies outside a source of {1} tokens")]
    EditOutOfRange(EditSpan, usize),
    #[error("{rows} rows but {outputs} outputs")]
    LengthMismatch { rows: usize, outputs: usize },
    #[error("M2 line {line}: {message}")]
    M2Parse { line: usize, message: String },
}

/// Raw tallies behind a [`ScoreReport`]. Adding counts and then scoring is
/// micro-averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub matched_edits: usize,
    pub system_edits: usize,
    pub gold_edits: usize,
    pub matched_words: usize,
    pub eval_words: usize,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            matched_edits: self.matched_edits + o.matched_edits,
            system_edits: self.system_edits + o.system_edits,
            gold_edits: self.gold_edits + o.gold_edits,
            matched_words: self.matched_words + o.matched_words,
            eval_words: self.eval_words + o.eval_words,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f_half: f64,
    /// `None` when no words were evaluated.
    pub accuracy: Option<f64>,
    pub counts: Counts,
}

/// Weighted harmonic mean of precision and recall; 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

impl ScoreReport {
    /// Precision is 1 when the system proposes nothing and recall is 1 when
    /// there is nothing to find.
    pub fn from_counts(counts: Counts) -> Self {
        let precision = if counts.system_edits == 0 {
            1.0
        } else {
            counts.matched_edits as f64 / counts.system_edits as f64
        };
        let recall = if counts.gold_edits == 0 {
            1.0
        } else {
            counts.matched_edits as f64 / counts.gold_edits as f64
        };
        let accuracy = (counts.eval_words > 0)
            .then(|| counts.matched_words as f64 / counts.eval_words as f64);
        ScoreReport {
            precision,
            recall,
            f1: f_beta(precision, recall, 1.0),
            f_half: f_beta(precision, recall, 0.5),
            accuracy,
            counts,
        }
    }

    /// `P R F1 F0.5 Acc` as percentages with one decimal.
    pub fn percent_line(&self) -> String {
        let acc = self
            .accuracy
            .map(|a| format!("{:.1}", a * 100.0))
            .unwrap_or_else(|| "-".into());
        format!(
            "P={:.1} R={:.1} F1={:.1} F0.5={:.1} Acc={}",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0,
            self.f_half * 100.0,
            acc
        )
    }
}

/// Which rows count toward word accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyScope {
    /// JA-labeled rows whose reference is not UNK.
    #[default]
    JaOnly,
    /// Every row, Hebrew and punctuation included.
    AllPositions,
}

impl std::str::FromStr for AccuracyScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ja-only" => Ok(AccuracyScope::JaOnly),
            "all-positions" => Ok(AccuracyScope::AllPositions),
            other => Err(format!("unknown accuracy scope {other:?}")),
        }
    }
}

impl AccuracyScope {
    fn includes(&self, row: &AlignmentRow) -> bool {
        match self {
            AccuracyScope::JaOnly => row.label() == Label::Ja && row.reference.is_some(),
            AccuracyScope::AllPositions => true,
        }
    }
}

/// Word-level accuracy of `outputs` (one per row) against the reference
/// column. An UNK reference never matches.
pub fn word_accuracy<S: AsRef<str>>(
    rows: &[AlignmentRow],
    outputs: &[S],
    scope: AccuracyScope,
) -> Result<ScoreReport, EvalError> {
    if rows.len() != outputs.len() {
        return Err(EvalError::LengthMismatch { rows: rows.len(), outputs: outputs.len() });
    }
    let mut counts = Counts::default();
    for (row, out) in rows.iter().zip(outputs) {
        if !scope.includes(row) {
            continue;
        }
        counts.eval_words += 1;
        if row.reference.as_deref() == Some(out.as_ref()) {
            counts.matched_words += 1;
        }
    }
    if counts.eval_words == 0 {
        return Err(EvalError::NoEvaluableRows);
    }
    Ok(ScoreReport::from_counts(counts))
}

/// Share of JA rows with a non-UNK reference whose hypothesis in the given
/// mode equals the reference exactly.
pub fn exact_match_accuracy(rows: &[AlignmentRow], mode: TranslitMode) -> Result<ScoreReport, EvalError> {
    let outputs: Vec<&str> = rows.iter().map(|r| r.hypothesis(mode)).collect();
    word_accuracy(rows, &outputs, AccuracyScope::JaOnly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Position, Token};

    fn row(label: Label, hyp: &str, reference: Option<&str>) -> AlignmentRow {
        AlignmentRow {
            source: Token {
                surface: String::new(),
                label,
                position: Position { section: 1, index: 0 },
            },
            hypothesis_dotted: hyp.into(),
            hypothesis_dotless: hyp.into(),
            reference: reference.map(String::from),
        }
    }

    #[test]
    fn empty_system_convention() {
        let r = ScoreReport::from_counts(Counts { gold_edits: 5, ..Default::default() });
        assert_eq!((r.precision, r.recall, r.f1, r.f_half), (1.0, 0.0, 0.0, 0.0));
        assert_eq!(r.accuracy, None);
        assert_eq!(r.percent_line(), "P=100.0 R=0.0 F1=0.0 F0.5=0.0 Acc=-");
    }

    #[test]
    fn f_half_formula() {
        let r = ScoreReport::from_counts(Counts {
            matched_edits: 1,
            system_edits: 2,
            gold_edits: 4,
            ..Default::default()
        });
        let (p, rc) = (0.5, 0.25);
        assert!((r.f_half - 1.25 * p * rc / (0.25 * p + rc)).abs() < 1e-12);
        assert!((r.f1 - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
    }

    #[test]
    fn exclusions() {
        let rows = vec![
            row(Label::Ja, "قال", Some("قال")),
            row(Label::Ja, "كلفه", Some("كلفة")),
            row(Label::Ja, "قنا", None),
            row(Label::Hebrew, "ال", Some("إله")),
            row(Label::Punctuation, ",", Some(":")),
        ];
        let r = exact_match_accuracy(&rows, TranslitMode::Dotted).unwrap();
        assert_eq!((r.counts.matched_words, r.counts.eval_words), (1, 2));
        let outs: Vec<&str> = rows.iter().map(|r| r.hypothesis_dotted.as_str()).collect();
        let all = word_accuracy(&rows, &outs, AccuracyScope::AllPositions).unwrap();
        assert_eq!((all.counts.matched_words, all.counts.eval_words), (1, 5));
    }

    #[test]
    fn no_evaluable_rows() {
        let rows = vec![row(Label::Hebrew, "a", Some("a")), row(Label::Punctuation, ",", Some(","))];
        assert_eq!(exact_match_accuracy(&rows, TranslitMode::Dotted), Err(EvalError::NoEvaluableRows));
    }

    #[test]
    fn perfect_hypothesis() {
        let rows = vec![row(Label::Ja, "a", Some("a")), row(Label::Ja, "b", Some("b"))];
        assert_eq!(exact_match_accuracy(&rows, TranslitMode::Dotless).unwrap().accuracy, Some(1.0));
    }

    #[test]
    fn counts_sum() {
        let a = Counts { matched_edits: 1, system_edits: 2, gold_edits: 3, matched_words: 4, eval_words: 5 };
        let total: Counts = [a, a].into_iter().sum();
        assert_eq!(total.eval_words, 10);
        assert_eq!(total.gold_edits, 6);
    }
}
