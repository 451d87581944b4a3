//! End-to-end run over an ingested corpus: transliterate, align, optionally
//! post-correct, score, and write the report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::align::{alignment_tsv, three_way, AlignmentCost, AlignmentRow, ThreeWay};
use crate::correct::{correct_sections, Backend, CorrectionError, CorrectionRequest, PromptTemplate};
use crate::corpus::{token_table, tokenize_reference_line, Label, LabelStats, ParallelCorpus};
use crate::eval::{
    classify_errors, error_rows_tsv, extract_edits, m2_counts, project_onto_source, word_accuracy,
    write_m2, AccuracyScope, Counts, ErrorCategory, ErrorRow, EvalError, M2Sentence, ScoreReport,
};
use crate::mapping::{MappingTable, TranslitMode};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("section {section}: {source}")]
    Correction { section: usize, source: CorrectionError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct CorrectionSettings {
    pub backend_name: String,
    pub template: PromptTemplate,
    pub model_id: String,
    pub max_retries: u32,
    pub timeout: Duration,
    pub backoff: Duration,
    pub concurrency: usize,
}

impl Default for CorrectionSettings {
    fn default() -> Self {
        let base = CorrectionRequest::new("");
        Self {
            backend_name: "identity".into(),
            template: base.template,
            model_id: base.model_id,
            max_retries: base.max_retries,
            timeout: base.timeout,
            backoff: base.backoff,
            concurrency: 4,
        }
    }
}

impl CorrectionSettings {
    pub fn request(&self, text: &str) -> CorrectionRequest {
        CorrectionRequest {
            text: text.to_string(),
            template: self.template,
            model_id: self.model_id.clone(),
            max_retries: self.max_retries,
            timeout: self.timeout,
            backoff: self.backoff,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    /// Which hypothesis column feeds correction.
    pub mode: TranslitMode,
    /// Hypothesis column used as the M2 source sentence; `None` means `mode`.
    pub m2_source: Option<TranslitMode>,
    pub table: MappingTable,
    pub cost: AlignmentCost,
    pub correction: CorrectionSettings,
}

/// Per-section system output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectionOutput {
    pub section: usize,
    pub input: Vec<String>,
    /// Source side of the M2 comparison.
    pub m2_source: Vec<String>,
    /// Raw corrected text, or the joined input when no backend ran.
    pub text: String,
    pub tokens: Vec<String>,
    pub extracted: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub mode: TranslitMode,
    pub backend: Option<String>,
    pub stats: LabelStats,
    pub alignment: ThreeWay,
    pub outputs: Vec<SectionOutput>,
    /// One projected output token per alignment row.
    pub row_outputs: Vec<String>,
    pub gold: Vec<M2Sentence>,
    pub system: Vec<M2Sentence>,
    pub translit_dotted: Option<ScoreReport>,
    pub translit_dotless: Option<ScoreReport>,
    pub m2: ScoreReport,
    pub output_accuracy_ja: Option<ScoreReport>,
    pub output_accuracy_all: Option<ScoreReport>,
    pub errors: Vec<(ErrorRow, ErrorCategory)>,
}

fn optional(r: Result<ScoreReport, EvalError>) -> Result<Option<ScoreReport>, EvalError> {
    match r {
        Ok(s) => Ok(Some(s)),
        Err(EvalError::NoEvaluableRows) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Output tokens are normalized the same way as reference tokens.
fn output_tokens(text: &str) -> Vec<String> {
    tokenize_reference_line(text, 0).into_iter().map(|t| t.surface).collect()
}

/// Runs every stage. With `backend == None` the transliteration itself is the
/// system output, so it proposes no edits.
pub fn run_pipeline(
    corpus: &ParallelCorpus,
    config: &PipelineConfig,
    backend: Option<&dyn Backend>,
) -> Result<PipelineReport, PipelineError> {
    let alignment = three_way(corpus, &config.table, &config.cost);
    let mut by_section: BTreeMap<usize, Vec<&AlignmentRow>> = BTreeMap::new();
    for row in &alignment.rows {
        by_section.entry(row.section()).or_default().push(row);
    }

    let column = |mode: TranslitMode| -> Vec<Vec<String>> {
        corpus
            .sections
            .iter()
            .map(|s| {
                by_section
                    .get(&s.line)
                    .map(|rows| rows.iter().map(|r| r.hypothesis(mode).to_string()).collect())
                    .unwrap_or_default()
            })
            .collect()
    };
    let inputs = column(config.mode);
    let m2_sources = column(config.m2_source.unwrap_or(config.mode));

    let mut outputs: Vec<SectionOutput> = corpus
        .sections
        .iter()
        .zip(inputs.iter().zip(m2_sources))
        .map(|(s, (input, m2_source))| SectionOutput {
            section: s.line,
            input: input.clone(),
            m2_source,
            text: input.join(" "),
            tokens: input.clone(),
            extracted: false,
        })
        .collect();

    if let Some(backend) = backend {
        let pending: Vec<usize> = (0..outputs.len()).filter(|&i| !inputs[i].is_empty()).collect();
        let requests: Vec<CorrectionRequest> =
            pending.iter().map(|&i| config.correction.request(&outputs[i].text)).collect();
        let results = correct_sections(&requests, backend, config.correction.concurrency);
        for (&i, result) in pending.iter().zip(results) {
            let response = result
                .map_err(|source| PipelineError::Correction { section: outputs[i].section, source })?;
            outputs[i].tokens = output_tokens(&response.corrected);
            outputs[i].text = response.corrected;
            outputs[i].extracted = response.extracted;
        }
    }

    let mut gold = Vec::with_capacity(outputs.len());
    let mut system = Vec::with_capacity(outputs.len());
    let mut counts = Counts::default();
    let mut row_outputs = Vec::with_capacity(alignment.rows.len());
    for (section, out) in corpus.sections.iter().zip(&outputs) {
        let reference: Vec<&str> = section.reference.iter().map(|t| t.surface.as_str()).collect();
        let gold_edits = extract_edits(&out.m2_source, &reference);
        let system_edits = extract_edits(&out.m2_source, &out.tokens);
        counts += m2_counts(&system_edits, &gold_edits)?;
        row_outputs.extend(project_onto_source(&out.input, &out.tokens));
        gold.push(M2Sentence { source: out.m2_source.clone(), edits: gold_edits });
        system.push(M2Sentence { source: out.m2_source.clone(), edits: system_edits });
    }

    let rows = &alignment.rows;
    let errors: Vec<ErrorRow> = rows
        .iter()
        .zip(&row_outputs)
        .filter_map(|(row, out)| {
            let reference = row.reference.as_ref()?;
            (row.label() != Label::Punctuation && out != reference).then(|| ErrorRow {
                source: row.source.surface.clone(),
                translit: row.hypothesis(config.mode).to_string(),
                corrected: out.clone(),
                reference: reference.clone(),
                label: row.label(),
            })
        })
        .collect();
    let categories = classify_errors(&errors);

    let dotted: Vec<&str> = rows.iter().map(|r| r.hypothesis_dotted.as_str()).collect();
    let dotless: Vec<&str> = rows.iter().map(|r| r.hypothesis_dotless.as_str()).collect();
    Ok(PipelineReport {
        mode: config.mode,
        backend: backend.map(|_| config.correction.backend_name.clone()),
        stats: corpus.source_stats(),
        translit_dotted: optional(word_accuracy(rows, &dotted, AccuracyScope::JaOnly))?,
        translit_dotless: optional(word_accuracy(rows, &dotless, AccuracyScope::JaOnly))?,
        m2: ScoreReport::from_counts(counts),
        output_accuracy_ja: optional(word_accuracy(rows, &row_outputs, AccuracyScope::JaOnly))?,
        output_accuracy_all: optional(word_accuracy(rows, &row_outputs, AccuracyScope::AllPositions))?,
        errors: errors.into_iter().zip(categories).collect(),
        alignment,
        outputs,
        row_outputs,
        gold,
        system,
    })
}

#[derive(Serialize)]
struct RowRecord<'a> {
    section: usize,
    index: usize,
    source: &'a str,
    label: Label,
    dotted: &'a str,
    dotless: &'a str,
    reference: Option<&'a str>,
    output: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: TranslitMode,
    backend: Option<&'a str>,
    sections: usize,
    label_stats: LabelStats,
    label_stats_line: String,
    transliteration_accuracy_dotted: Option<ScoreReport>,
    transliteration_accuracy_dotless: Option<ScoreReport>,
    m2: ScoreReport,
    output_accuracy_ja_only: Option<ScoreReport>,
    output_accuracy_all_positions: Option<ScoreReport>,
    error_categories: BTreeMap<&'static str, usize>,
    untagged_responses: usize,
    warnings: usize,
}

fn pct(r: &Option<ScoreReport>) -> String {
    match r.and_then(|r| r.accuracy) {
        Some(a) => format!("{:.1}", a * 100.0),
        None => "n/a".into(),
    }
}

impl PipelineReport {
    pub fn rows_jsonl(&self) -> String {
        let mut out = String::new();
        for (row, output) in self.alignment.rows.iter().zip(&self.row_outputs) {
            let rec = RowRecord {
                section: row.section(),
                index: row.source.position.index,
                source: &row.source.surface,
                label: row.label(),
                dotted: &row.hypothesis_dotted,
                dotless: &row.hypothesis_dotless,
                reference: row.reference.as_deref(),
                output,
            };
            out.push_str(&serde_json::to_string(&rec).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    pub fn category_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        for (_, c) in &self.errors {
            *counts.entry(c.as_str()).or_default() += 1;
        }
        counts
    }

    pub fn summary_json(&self) -> String {
        let summary = Summary {
            mode: self.mode,
            backend: self.backend.as_deref(),
            sections: self.outputs.len(),
            label_stats: self.stats,
            label_stats_line: self.stats.summary_line(),
            transliteration_accuracy_dotted: self.translit_dotted,
            transliteration_accuracy_dotless: self.translit_dotless,
            m2: self.m2,
            output_accuracy_ja_only: self.output_accuracy_ja,
            output_accuracy_all_positions: self.output_accuracy_all,
            error_categories: self.category_counts(),
            untagged_responses: self.outputs.iter().filter(|o| self.backend.is_some() && !o.extracted && !o.input.is_empty()).count(),
            warnings: self.alignment.warnings.len(),
        };
        let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.stats.summary_line());
        s.push('\n');
        s.push_str(&format!(
            "Transliteration accuracy (JA words): dotted {} dotless {}\n",
            pct(&self.translit_dotted),
            pct(&self.translit_dotless)
        ));
        s.push_str(&format!(
            "Output ({} input, backend {}): P={:.1} R={:.1} F1={:.1} F0.5={:.1} Acc(JA)={} Acc(all)={}\n",
            self.mode,
            self.backend.as_deref().unwrap_or("none"),
            self.m2.precision * 100.0,
            self.m2.recall * 100.0,
            self.m2.f1 * 100.0,
            self.m2.f_half * 100.0,
            pct(&self.output_accuracy_ja),
            pct(&self.output_accuracy_all),
        ));
        s.push_str(&format!("Errors: {}", self.errors.len()));
        for (name, n) in self.category_counts() {
            s.push_str(&format!(" {name}={n}"));
        }
        s.push('\n');
        s
    }

    pub fn corrected_text(&self) -> String {
        self.outputs.iter().map(|o| format!("{}\n", o.tokens.join(" "))).collect()
    }

    pub fn errors_tsv(&self) -> String {
        let (rows, cats): (Vec<ErrorRow>, Vec<ErrorCategory>) = self.errors.iter().cloned().unzip();
        error_rows_tsv(&rows, &cats)
    }

    /// Writes every report file into `dir`, creating it if needed. Returns
    /// the paths written.
    pub fn write_to(&self, corpus: &ParallelCorpus, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let warnings: String = self.alignment.warnings.iter().map(|w| format!("{w}\n")).collect();
        let files = [
            ("source_tokens.tsv", token_table(corpus.source_tokens())),
            ("reference_tokens.tsv", token_table(corpus.reference_tokens())),
            ("alignment.tsv", alignment_tsv(&self.alignment.rows)),
            ("gold.m2", write_m2(&self.gold)),
            ("system.m2", write_m2(&self.system)),
            ("corrected.txt", self.corrected_text()),
            ("rows.jsonl", self.rows_jsonl()),
            ("errors.tsv", self.errors_tsv()),
            ("warnings.log", warnings),
            ("summary.json", self.summary_json()),
            ("summary.txt", self.summary_text()),
        ];
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest_str;
    use crate::correct::{FixtureBackend, IdentityBackend};

    fn corpus(src: &str, reference: &str) -> ParallelCorpus {
        ingest_str(src, reference, &Default::default(), None).unwrap().corpus
    }

    #[test]
    fn identity_backend_has_no_edits() {
        let c = corpus("קאל אלכזרי\n", "فقال الخزري\n");
        let cfg = PipelineConfig::default();
        let r = run_pipeline(&c, &cfg, Some(&IdentityBackend)).unwrap();
        assert!(r.m2.counts.gold_edits > 0);
        assert_eq!((r.m2.precision, r.m2.recall, r.m2.f1, r.m2.f_half), (1.0, 0.0, 0.0, 0.0));
        let none = run_pipeline(&c, &cfg, None).unwrap();
        assert_eq!(none.m2, r.m2);
        assert_eq!(none.rows_jsonl(), r.rows_jsonl());
    }

    #[test]
    fn reference_equal_to_translit() {
        let c = corpus("קאל אלכׄזרי\n", "قال الخزري\n");
        let r = run_pipeline(&c, &PipelineConfig::default(), None).unwrap();
        assert_eq!(r.translit_dotted.unwrap().accuracy, Some(1.0));
        assert_eq!(r.m2.counts.gold_edits, 0);
        assert!(r.errors.is_empty());
    }

    #[test]
    fn fixture_correction_is_scored() {
        let c = corpus("קאל אלכזרי\n", "قال الخزري\n");
        let mut fx = FixtureBackend::default();
        fx.insert("قال الكزري", "<output>قال الخزري</output>");
        let cfg = PipelineConfig { mode: TranslitMode::Dotted, ..Default::default() };
        let r = run_pipeline(&c, &cfg, Some(&fx)).unwrap();
        assert_eq!(r.m2.counts.matched_edits, 1);
        assert_eq!((r.m2.precision, r.m2.recall), (1.0, 1.0));
        assert_eq!(r.output_accuracy_ja.unwrap().accuracy, Some(1.0));
        assert_eq!(r.corrected_text(), "قال الخزري\n");
    }

    #[test]
    fn dotless_m2_source_counts_dot_restoration_as_edits() {
        let c = corpus("קאל אלכׄזרי\n", "قال الخزري\n");
        let cfg = PipelineConfig { m2_source: Some(TranslitMode::Dotless), ..Default::default() };
        let r = run_pipeline(&c, &cfg, Some(&IdentityBackend)).unwrap();
        assert_eq!(r.gold[0].source, ["قال", "الكزري"]);
        assert_eq!((r.m2.counts.matched_edits, r.m2.counts.system_edits), (1, 1));
        assert_eq!((r.m2.precision, r.m2.recall), (1.0, 1.0));
    }

    #[test]
    fn fixture_miss_is_a_hard_error() {
        let c = corpus("קאל\n", "قال\n");
        let r = run_pipeline(&c, &PipelineConfig::default(), Some(&FixtureBackend::default()));
        assert!(matches!(r, Err(PipelineError::Correction { section: 1, .. })));
    }

    #[test]
    fn writes_report_files() {
        let c = corpus("קאל אלכזרי .\n", "قال الخزري .\n");
        let r = run_pipeline(&c, &PipelineConfig::default(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = r.write_to(&c, dir.path()).unwrap();
        assert_eq!(written.len(), 11);
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.starts_with("3 words. Of those words, 1 (33.33%) are labeled as punctuation"));
        let errors = fs::read_to_string(dir.path().join("errors.tsv")).unwrap();
        assert_eq!(errors, "אלכזרי\tالكزري\tالكزري\tالخزري\tJA\tunclassified\n");
    }
}
