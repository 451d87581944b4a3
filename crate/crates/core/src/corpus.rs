//! Parallel corpus ingestion: one section per line, JA source on one side and
//! Arabic reference on the other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script::{
    canonicalize_upper_dots, contains_niqqud, is_punctuation_char, is_punctuation_token,
    normalize, NormalizationPolicy,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("source has {source_lines} lines but reference has {reference_lines}")]
    LineCountMismatch { source_lines: usize, reference_lines: usize },
    #[error("{path}: invalid UTF-8 on line {line}")]
    InvalidEncoding { path: PathBuf, line: usize },
    #[error("dropped line {line} is outside 1..={total}")]
    DropLineOutOfRange { line: usize, total: usize },
    #[error("invalid drop-lines entry {0:?}")]
    BadDropList(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "JA")]
    Ja,
    #[serde(rename = "Heb")]
    Hebrew,
    #[serde(rename = "Punc")]
    Punctuation,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Ja => "JA",
            Label::Hebrew => "Heb",
            Label::Punctuation => "Punc",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "JA" => Ok(Label::Ja),
            "Heb" | "Hebrew" => Ok(Label::Hebrew),
            "Punc" | "Punctuation" => Ok(Label::Punctuation),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Location of a token: original 1-based line number and 0-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub section: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub label: Label,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    /// 1-based line number in the input files.
    pub line: usize,
    pub source: Vec<Token>,
    pub reference: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParallelCorpus {
    pub sections: Vec<Section>,
    pub dropped_lines: BTreeSet<usize>,
}

impl ParallelCorpus {
    pub fn source_tokens(&self) -> impl Iterator<Item = &Token> {
        self.sections.iter().flat_map(|s| s.source.iter())
    }

    pub fn reference_tokens(&self) -> impl Iterator<Item = &Token> {
        self.sections.iter().flat_map(|s| s.reference.iter())
    }

    pub fn source_stats(&self) -> LabelStats {
        LabelStats::from_tokens(self.source_tokens())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub corpus: ParallelCorpus,
    pub warnings: Vec<IngestWarning>,
}

/// Known tokens whose label overrides the niqqud heuristic. Keys are compared
/// with all marks removed and final forms folded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Label>,
}

fn lexicon_key(token: &str) -> String {
    normalize(token, &NormalizationPolicy::all())
}

impl Lexicon {
    pub fn insert(&mut self, token: &str, label: Label) {
        self.entries.insert(lexicon_key(token), label);
    }

    pub fn get(&self, token: &str) -> Option<Label> {
        self.entries.get(&lexicon_key(token)).copied()
    }

    /// One token per line, optionally followed by a tab and `JA` or `Heb`
    /// (default `Heb`). `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut lex = Lexicon::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, label) = match line.split_once('\t') {
                Some((t, l)) => {
                    let label = l.trim().parse::<Label>().map_err(|message| {
                        IngestError::Lexicon { line: i + 1, message }
                    })?;
                    if label == Label::Punctuation {
                        return Err(IngestError::Lexicon {
                            line: i + 1,
                            message: "punctuation cannot be assigned by lexicon".into(),
                        });
                    }
                    (t.trim(), label)
                }
                None => (line, Label::Hebrew),
            };
            lex.insert(token, label);
        }
        Ok(lex)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        Self::parse(&read_utf8(path)?)
    }
}

/// Parses a comma-separated list such as `130,131,203`.
pub fn parse_drop_lines(list: &str) -> Result<BTreeSet<usize>, IngestError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(IngestError::BadDropList(s.to_string())),
        })
        .collect()
}

/// Hebrew abbreviation marks stay glued to the word they follow.
fn sticks_to_word(ch: char) -> bool {
    matches!(ch, '\u{05F3}' | '\u{05F4}')
}

/// Splits on whitespace, then peels leading and trailing punctuation off each
/// word as single-character tokens. Word-internal punctuation is kept.
pub fn separate_punctuation(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        while start < chars.len() && is_punctuation_char(chars[start]) {
            start += 1;
        }
        let mut end = chars.len();
        while end > start && is_punctuation_char(chars[end - 1]) && !sticks_to_word(chars[end - 1]) {
            end -= 1;
        }
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

/// Assigns source-side labels: punctuation first, then the lexicon, then
/// niqqud presence for Hebrew, JA otherwise.
pub fn label_source_tokens(tokens: Vec<Token>, lexicon: Option<&Lexicon>) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|mut t| {
            t.label = source_label(&t.surface, lexicon);
            t
        })
        .collect()
}

pub fn source_label(surface: &str, lexicon: Option<&Lexicon>) -> Label {
    if is_punctuation_token(surface).unwrap_or(false) {
        Label::Punctuation
    } else if let Some(label) = lexicon.and_then(|l| l.get(surface)) {
        label
    } else if contains_niqqud(surface) {
        Label::Hebrew
    } else {
        Label::Ja
    }
}

fn reference_label(surface: &str) -> Label {
    if is_punctuation_token(surface).unwrap_or(false) {
        Label::Punctuation
    } else {
        Label::Ja
    }
}

pub fn tokenize_source_line(line: &str, section: usize, lexicon: Option<&Lexicon>) -> Vec<Token> {
    separate_punctuation(&canonicalize_upper_dots(line))
        .into_iter()
        .enumerate()
        .map(|(index, surface)| Token {
            label: source_label(&surface, lexicon),
            surface,
            position: Position { section, index },
        })
        .collect()
}

pub fn tokenize_reference_line(line: &str, section: usize) -> Vec<Token> {
    let stripped = normalize(line, &NormalizationPolicy::arabic_diacritics_only());
    separate_punctuation(&stripped)
        .into_iter()
        .enumerate()
        .map(|(index, surface)| Token {
            label: reference_label(&surface),
            surface,
            position: Position { section, index },
        })
        .collect()
}

fn footnote_markers(line: &str) -> bool {
    let superscript = |c: char| matches!(c, '¹' | '²' | '³' | '\u{2070}'..='\u{2079}');
    if line.chars().any(superscript) {
        return true;
    }
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let digits = bytes[i + 1..].iter().take_while(|b| b.is_ascii_digit()).count();
            if digits > 0 && bytes.get(i + 1 + digits) == Some(&b']') {
                return true;
            }
        }
        i += 1;
    }
    false
}

fn read_utf8(path: &Path) -> Result<String, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = e.utf8_error().valid_up_to();
        let line = 1 + e.as_bytes()[..valid].iter().filter(|&&b| b == b'\n').count();
        IngestError::InvalidEncoding { path: path.to_path_buf(), line }
    })
}

pub fn ingest(
    source_path: impl AsRef<Path>,
    reference_path: impl AsRef<Path>,
    dropped_lines: &BTreeSet<usize>,
    lexicon: Option<&Lexicon>,
) -> Result<Ingested, IngestError> {
    let source = read_utf8(source_path.as_ref())?;
    let reference = read_utf8(reference_path.as_ref())?;
    ingest_str(&source, &reference, dropped_lines, lexicon)
}

pub fn ingest_str(
    source: &str,
    reference: &str,
    dropped_lines: &BTreeSet<usize>,
    lexicon: Option<&Lexicon>,
) -> Result<Ingested, IngestError> {
    let src_lines: Vec<&str> = source.lines().collect();
    let ref_lines: Vec<&str> = reference.lines().collect();
    if src_lines.len() != ref_lines.len() {
        return Err(IngestError::LineCountMismatch {
            source_lines: src_lines.len(),
            reference_lines: ref_lines.len(),
        });
    }
    if let Some(&bad) = dropped_lines.iter().find(|&&l| l == 0 || l > src_lines.len()) {
        return Err(IngestError::DropLineOutOfRange { line: bad, total: src_lines.len() });
    }

    let mut out = Ingested::default();
    out.corpus.dropped_lines = dropped_lines.clone();
    for (i, (src, refr)) in src_lines.iter().zip(&ref_lines).enumerate() {
        let line = i + 1;
        if dropped_lines.contains(&line) {
            continue;
        }
        if footnote_markers(refr) || footnote_markers(src) {
            out.warnings.push(IngestWarning {
                line,
                message: "bracketed or superscript numeric marker; footnotes should be removed upstream"
                    .into(),
            });
        }
        out.corpus.sections.push(Section {
            line,
            source: tokenize_source_line(src, line, lexicon),
            reference: tokenize_reference_line(refr, line),
        });
    }
    Ok(out)
}

/// Label counts in the form used for corpus statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LabelStats {
    pub total: usize,
    pub punctuation: usize,
    pub hebrew: usize,
    pub ja: usize,
}

fn with_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl LabelStats {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut s = LabelStats::default();
        for t in tokens {
            s.total += 1;
            match t.label {
                Label::Punctuation => s.punctuation += 1,
                Label::Hebrew => s.hebrew += 1,
                Label::Ja => s.ja += 1,
            }
        }
        s
    }

    fn pct(&self, n: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.total as f64
        }
    }

    /// e.g. `46,854 words. Of those words, 4,576 (9.77%) are labeled as
    /// punctuation, 916 (1.96%) as Hebrew and 41,362 (88.28%) as JA.`
    pub fn summary_line(&self) -> String {
        format!(
            "{} words. Of those words, {} ({:.2}%) are labeled as punctuation, {} ({:.2}%) as Hebrew and {} ({:.2}%) as JA.",
            with_thousands(self.total),
            with_thousands(self.punctuation),
            self.pct(self.punctuation),
            with_thousands(self.hebrew),
            self.pct(self.hebrew),
            with_thousands(self.ja),
            self.pct(self.ja),
        )
    }
}

/// Tab-separated `section index surface label`, one token per line.
pub fn token_table<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            t.position.section, t.position.index, t.surface, t.label
        ));
    }
    out
}
