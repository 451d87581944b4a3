use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Counts, EvalError, ScoreReport};
use crate::align::{align_tokens, AlignOp, AlignmentCost};

/// Replacement of `source[start..end]` by `replacement`. `start == end` is an
/// insertion; an empty replacement over a nonempty range is a deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EditSpan {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
}

impl EditSpan {
    pub fn new(start: usize, end: usize, replacement: impl IntoIterator<Item = impl Into<String>>) -> Self {
        assert!(start <= end, "edit start {start} after end {end}");
        Self { start, end, replacement: replacement.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for EditSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}) -> {:?}", self.start, self.end, self.replacement.join(" "))
    }
}

/// Gold/system edits from a minimal-cost word alignment of `source` against
/// `target`. Each maximal run of non-identical alignment columns becomes one
/// span.
pub fn extract_edits<S: AsRef<str>, T: AsRef<str>>(source: &[S], target: &[T]) -> Vec<EditSpan> {
    let alignment = align_tokens(source, target, &AlignmentCost::default());
    let mut edits = Vec::new();
    let mut open: Option<EditSpan> = None;
    let mut src_pos = 0;

    for op in alignment.ops {
        let identical = matches!(op, AlignOp::Pair(i, j) if source[i].as_ref() == target[j].as_ref());
        if identical {
            edits.extend(open.take());
            src_pos += 1;
            continue;
        }
        let span = open.get_or_insert_with(|| EditSpan { start: src_pos, end: src_pos, replacement: vec![] });
        match op {
            AlignOp::Pair(_, j) => {
                src_pos += 1;
                span.replacement.push(target[j].as_ref().to_string());
            }
            AlignOp::LeftOnly(_) => src_pos += 1,
            AlignOp::RightOnly(j) => span.replacement.push(target[j].as_ref().to_string()),
        }
        span.end = src_pos;
    }
    edits.extend(open);
    edits
}

fn check_edits(edits: &[EditSpan], source_len: Option<usize>) -> Result<Vec<EditSpan>, EvalError> {
    let mut sorted = edits.to_vec();
    sorted.sort();
    for pair in sorted.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let both_insert_here = a.start == a.end && b.start == b.end && a.start == b.start;
        if both_insert_here || (a.start < b.end && b.start < a.end) {
            return Err(EvalError::OverlappingEdits { first: a.clone(), second: b.clone() });
        }
    }
    if let Some(len) = source_len {
        if let Some(bad) = sorted.iter().find(|e| e.end > len) {
            return Err(EvalError::EditOutOfRange(bad.clone(), len));
        }
    }
    Ok(sorted)
}

/// Applies non-overlapping edits to `source`.
pub fn apply_edits<S: AsRef<str>>(source: &[S], edits: &[EditSpan]) -> Result<Vec<String>, EvalError> {
    let sorted = check_edits(edits, Some(source.len()))?;
    let mut out = Vec::with_capacity(source.len());
    let mut pos = 0;
    for e in &sorted {
        out.extend(source[pos..e.start].iter().map(|s| s.as_ref().to_string()));
        out.extend(e.replacement.iter().cloned());
        pos = e.end;
    }
    out.extend(source[pos..].iter().map(|s| s.as_ref().to_string()));
    Ok(out)
}

/// Tallies exact (start, end, replacement) matches between two edit sets over
/// the same source.
pub fn m2_counts(system: &[EditSpan], gold: &[EditSpan]) -> Result<Counts, EvalError> {
    let system = check_edits(system, None)?;
    let gold = check_edits(gold, None)?;
    let matched = system.iter().filter(|e| gold.binary_search(e).is_ok()).count();
    Ok(Counts {
        matched_edits: matched,
        system_edits: system.len(),
        gold_edits: gold.len(),
        ..Counts::default()
    })
}

pub fn m2_score(system: &[EditSpan], gold: &[EditSpan]) -> Result<ScoreReport, EvalError> {
    m2_counts(system, gold).map(ScoreReport::from_counts)
}

/// For each source token, the target token aligned to it, or an empty string
/// when the alignment deletes it. Target-side insertions are not attributed.
pub fn project_onto_source<S: AsRef<str>, T: AsRef<str>>(source: &[S], target: &[T]) -> Vec<String> {
    let mut out = vec![String::new(); source.len()];
    for op in align_tokens(source, target, &AlignmentCost::default()).ops {
        if let AlignOp::Pair(i, j) = op {
            out[i] = target[j].as_ref().to_string();
        }
    }
    out
}

/// One `S` block of an M2 file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct M2Sentence {
    pub source: Vec<String>,
    pub edits: Vec<EditSpan>,
}

/// Renders sentences in M2 form: an `S` line, one `A` line per edit, then a
/// blank line. The error type is always `NA`.
pub fn write_m2(sentences: &[M2Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str("S ");
        out.push_str(&s.source.join(" "));
        out.push('\n');
        for e in &s.edits {
            out.push_str(&format!(
                "A {} {}|||NA|||{}|||REQUIRED|||-NONE-|||0\n",
                e.start,
                e.end,
                e.replacement.join(" ")
            ));
        }
        out.push('\n');
    }
    out
}

/// Reads M2 text. Only annotator 0 is kept; `noop` and `-1 -1` lines carry no
/// edit.
pub fn parse_m2(text: &str) -> Result<Vec<M2Sentence>, EvalError> {
    let mut sentences = Vec::new();
    let mut current: Option<M2Sentence> = None;
    for (i, line) in text.lines().enumerate() {
        let err = |message: &str| EvalError::M2Parse { line: i + 1, message: message.to_string() };
        if line.trim().is_empty() {
            sentences.extend(current.take());
        } else if let Some(rest) = line.strip_prefix('S') {
            sentences.extend(current.take());
            let tokens = rest.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
            current = Some(M2Sentence { source: tokens, edits: vec![] });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let sentence = current.as_mut().ok_or_else(|| err("A line before any S line"))?;
            let fields: Vec<&str> = rest.split("|||").collect();
            if fields.len() < 3 {
                return Err(err("expected at least 3 |||-separated fields"));
            }
            let annotator = fields.get(5).map(|a| a.trim()).unwrap_or("0");
            if annotator != "0" || fields[1] == "noop" {
                continue;
            }
            let mut offsets = fields[0].split_whitespace();
            let (Some(start), Some(end)) = (offsets.next(), offsets.next()) else {
                return Err(err("missing span offsets"));
            };
            if start == "-1" {
                continue;
            }
            let start: usize = start.parse().map_err(|_| err("bad start offset"))?;
            let end: usize = end.parse().map_err(|_| err("bad end offset"))?;
            if end < start {
                return Err(err("span end before start"));
            }
            let replacement = match fields[2].trim() {
                "" | "-NONE-" => vec![],
                r => r.split(' ').filter(|t| !t.is_empty()).map(String::from).collect(),
            };
            sentence.edits.push(EditSpan { start, end, replacement });
        } else {
            return Err(err("expected an S or A line"));
        }
    }
    sentences.extend(current);
    Ok(sentences)
}
