use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    ValidParaphrase,
    UnnecessaryChange,
    AlifHamza,
    WrongWord,
    SourceError,
    HebTranslation,
    UnkOutput,
    /// Needs a human to decide between paraphrase, wrong word and source error.
    Unclassified,
}

impl ErrorCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCategory::ValidParaphrase => "valid_paraphrase",
            ErrorCategory::UnnecessaryChange => "unnecessary_change",
            ErrorCategory::AlifHamza => "alif_hamza",
            ErrorCategory::WrongWord => "wrong_word",
            ErrorCategory::SourceError => "source_error",
            ErrorCategory::HebTranslation => "heb_translation",
            ErrorCategory::UnkOutput => "unk_output",
            ErrorCategory::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A word where the corrected output disagrees with the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub source: String,
    pub translit: String,
    pub corrected: String,
    pub reference: String,
    pub label: Label,
}

/// Folds alif/hamza spelling variation: hamzated alifs become bare alif,
/// standalone and seated hamzas disappear, teh marbuta merges with heh and
/// alif maqsura with ya.
pub fn collapse_alif_hamza(word: &str) -> String {
    word.chars()
        .filter_map(|c| match c {
            'آ' | 'أ' | 'إ' | 'ا' => Some('ا'),
            'ؤ' | 'ئ' | 'ء' => None,
            'ة' | 'ه' => Some('ه'),
            'ى' | 'ي' => Some('ي'),
            other => Some(other),
        })
        .collect()
}

fn is_unk_placeholder(s: &str) -> bool {
    matches!(s.trim().to_ascii_uppercase().as_str(), "UNK" | "<UNK>" | "[UNK]")
}

/// First matching rule wins: UNK output, Hebrew label, change to an already
/// correct transliteration, alif/hamza-only difference.
pub fn classify_error(row: &ErrorRow) -> ErrorCategory {
    if is_unk_placeholder(&row.corrected) {
        ErrorCategory::UnkOutput
    } else if row.label == Label::Hebrew {
        ErrorCategory::HebTranslation
    } else if row.translit == row.reference && row.corrected != row.reference {
        ErrorCategory::UnnecessaryChange
    } else if collapse_alif_hamza(&row.corrected) == collapse_alif_hamza(&row.reference) {
        ErrorCategory::AlifHamza
    } else {
        ErrorCategory::Unclassified
    }
}

pub fn classify_errors(rows: &[ErrorRow]) -> Vec<ErrorCategory> {
    rows.iter().map(classify_error).collect()
}

/// Five tab-separated columns: source, translit, corrected, reference, label.
pub fn parse_error_rows(text: &str) -> Result<Vec<ErrorRow>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let err = |message: String| EvalError::M2Parse { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [source, translit, corrected, reference, label] = cols[..] else {
                return Err(err(format!("expected 5 columns, found {}", cols.len())));
            };
            Ok(ErrorRow {
                source: source.into(),
                translit: translit.into(),
                corrected: corrected.into(),
                reference: reference.into(),
                label: label.parse().map_err(err)?,
            })
        })
        .collect()
}

/// The input columns followed by the assigned category.
pub fn error_rows_tsv(rows: &[ErrorRow], categories: &[ErrorCategory]) -> String {
    rows.iter()
        .zip(categories)
        .map(|(r, c)| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.source, r.translit, r.corrected, r.reference, r.label, c
            )
        })
        .collect()
}
