//! Word-level monotone alignment of the machine transliteration against the
//! Arabic reference, and the three-way (source, hypothesis, reference) table
//! built from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, ParallelCorpus, Position, Token};
use crate::mapping::{transliterate_token, MappingTable, TranslitMode, TranslitWarning};

/// Literal used for an unaligned reference cell.
pub const UNK: &str = "UNK";

const TIE_EPSILON: f64 = 1e-9;

/// Character Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Substitution cost is Levenshtein distance over the longer length; every
/// unaligned token on either side costs `gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentCost {
    pub gap: f64,
}

impl Default for AlignmentCost {
    fn default() -> Self {
        Self { gap: 0.6 }
    }
}

impl AlignmentCost {
    pub fn substitution(&self, a: &str, b: &str) -> f64 {
        let longest = a.chars().count().max(b.chars().count());
        if longest == 0 {
            0.0
        } else {
            levenshtein(a, b) as f64 / longest as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignOp {
    /// `left[i]` paired with `right[j]`.
    Pair(usize, usize),
    /// `left[i]` has no counterpart.
    LeftOnly(usize),
    /// `right[j]` has no counterpart.
    RightOnly(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    pub cost: f64,
}

/// Minimum-cost monotone alignment of two token sequences.
///
/// Among equal-cost alignments the trace prefers, at each step, pairing the
/// current tokens, then skipping the right-hand token, then skipping the
/// left-hand token.
pub fn align_tokens<L, R>(left: &[L], right: &[R], cost: &AlignmentCost) -> Alignment
where
    L: AsRef<str>,
    R: AsRef<str>,
{
    let (n, m) = (left.len(), right.len());
    let sub: Vec<Vec<f64>> = left
        .iter()
        .map(|a| right.iter().map(|b| cost.substitution(a.as_ref(), b.as_ref())).collect())
        .collect();

    // suffix[i][j]: cheapest alignment of left[i..] with right[j..]
    let mut suffix = vec![vec![0.0f64; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            suffix[i][j] = match (i < n, j < m) {
                (false, false) => 0.0,
                (true, false) => cost.gap + suffix[i + 1][j],
                (false, true) => cost.gap + suffix[i][j + 1],
                (true, true) => (sub[i][j] + suffix[i + 1][j + 1])
                    .min(cost.gap + suffix[i][j + 1])
                    .min(cost.gap + suffix[i + 1][j]),
            };
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let target = suffix[i][j];
        let close = |v: f64| (v - target).abs() <= TIE_EPSILON;
        if i < n && j < m && close(sub[i][j] + suffix[i + 1][j + 1]) {
            ops.push(AlignOp::Pair(i, j));
            i += 1;
            j += 1;
        } else if j < m && close(cost.gap + suffix[i][j + 1]) {
            ops.push(AlignOp::RightOnly(j));
            j += 1;
        } else {
            ops.push(AlignOp::LeftOnly(i));
            i += 1;
        }
    }
    Alignment { ops, cost: suffix[0][0] }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedPair {
    pub hypothesis: String,
    /// `None` stands for UNK.
    pub reference: Option<String>,
}

/// Aligns one section. Every hypothesis token yields exactly one pair, in
/// order; reference tokens left unaligned are dropped.
pub fn align_section<H, R>(hyp_tokens: &[H], ref_tokens: &[R], cost: &AlignmentCost) -> Vec<AlignedPair>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    align_tokens(hyp_tokens, ref_tokens, cost)
        .ops
        .into_iter()
        .filter_map(|op| match op {
            AlignOp::Pair(i, j) => Some(AlignedPair {
                hypothesis: hyp_tokens[i].as_ref().to_string(),
                reference: Some(ref_tokens[j].as_ref().to_string()),
            }),
            AlignOp::LeftOnly(i) => Some(AlignedPair {
                hypothesis: hyp_tokens[i].as_ref().to_string(),
                reference: None,
            }),
            AlignOp::RightOnly(_) => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub source: Token,
    pub hypothesis_dotted: String,
    pub hypothesis_dotless: String,
    pub reference: Option<String>,
}

impl AlignmentRow {
    pub fn section(&self) -> usize {
        self.source.position.section
    }

    pub fn label(&self) -> Label {
        self.source.label
    }

    pub fn hypothesis(&self, mode: TranslitMode) -> &str {
        match mode {
            TranslitMode::Dotted => &self.hypothesis_dotted,
            TranslitMode::Dotless => &self.hypothesis_dotless,
        }
    }

    pub fn reference_or_unk(&self) -> &str {
        self.reference.as_deref().unwrap_or(UNK)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ThreeWay {
    pub rows: Vec<AlignmentRow>,
    pub warnings: Vec<TranslitWarning>,
}

fn translit_or_copy(
    surface: &str,
    table: &MappingTable,
    mode: TranslitMode,
    warnings: &mut Vec<TranslitWarning>,
) -> String {
    match transliterate_token(surface, table, mode) {
        Ok(t) => {
            warnings.extend(t.warnings);
            t.text
        }
        Err(e) => {
            warnings.push(TranslitWarning::Unmappable(e));
            surface.to_string()
        }
    }
}

/// Transliterates every source token in both modes, aligns the dotted
/// hypothesis against the reference section by section, and attaches the
/// source tokens positionally.
pub fn three_way(corpus: &ParallelCorpus, table: &MappingTable, cost: &AlignmentCost) -> ThreeWay {
    let mut out = ThreeWay::default();
    for section in &corpus.sections {
        let dotted: Vec<String> = section
            .source
            .iter()
            .map(|t| translit_or_copy(&t.surface, table, TranslitMode::Dotted, &mut out.warnings))
            .collect();
        // the dotted pass already reported any token problems
        let mut ignored = Vec::new();
        let dotless: Vec<String> = section
            .source
            .iter()
            .map(|t| translit_or_copy(&t.surface, table, TranslitMode::Dotless, &mut ignored))
            .collect();
        let refs: Vec<&str> = section.reference.iter().map(|t| t.surface.as_str()).collect();
        let pairs = align_section(&dotted, &refs, cost);
        debug_assert_eq!(pairs.len(), section.source.len());
        for ((source, pair), dotless) in section.source.iter().zip(pairs).zip(dotless) {
            out.rows.push(AlignmentRow {
                source: source.clone(),
                hypothesis_dotted: pair.hypothesis,
                hypothesis_dotless: dotless,
                reference: pair.reference,
            });
        }
    }
    out
}

/// Tab-separated `section source hypothesis_dotted hypothesis_dotless
/// reference label`, one row per line, `UNK` for unaligned references.
pub fn alignment_tsv(rows: &[AlignmentRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.section(),
            r.source.surface,
            r.hypothesis_dotted,
            r.hypothesis_dotless,
            r.reference_or_unk(),
            r.label()
        ));
    }
    out
}

#[derive(Debug, Error)]
#[error("alignment TSV line {line}: {message}")]
pub struct AlignmentParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_alignment_tsv(text: &str) -> Result<Vec<AlignmentRow>, AlignmentParseError> {
    let mut rows: Vec<AlignmentRow> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| AlignmentParseError { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        let [section, source, dotted, dotless, reference, label] = cols[..] else {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        };
        let section: usize = section.parse().map_err(|_| err(format!("bad section {section:?}")))?;
        let label: Label = label.parse().map_err(err)?;
        let index = match rows.last() {
            Some(prev) if prev.section() == section => prev.source.position.index + 1,
            _ => 0,
        };
        rows.push(AlignmentRow {
            source: Token {
                surface: source.to_string(),
                label,
                position: Position { section, index },
            },
            hypothesis_dotted: dotted.to_string(),
            hypothesis_dotless: dotless.to_string(),
            reference: (reference != UNK).then(|| reference.to_string()),
        });
    }
    Ok(rows)
}
