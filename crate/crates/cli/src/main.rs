mod backend;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use backend::{BackendArgs, BackendKind};
use jatrans::align::{alignment_tsv, parse_alignment_tsv, three_way, AlignmentCost};
use jatrans::correct::correct_sections;
use jatrans::corpus::{ingest, parse_drop_lines, token_table, tokenize_reference_line, Ingested, Lexicon};
use jatrans::eval::{
    classify_errors, error_rows_tsv, extract_edits, m2_counts, parse_error_rows, parse_m2, word_accuracy,
    AccuracyScope, Counts, ScoreReport,
};
use jatrans::mapping::{default_mapping, transliterate_text, MappingTable, TranslitMode};
use jatrans::pipeline::{run_pipeline, PipelineConfig};

#[derive(Parser)]
#[command(name = "jatrans", version, about = "Judeo-Arabic to Arabic transliteration and evaluation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Dotted,
    Dotless,
}

impl From<ModeArg> for TranslitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dotted => TranslitMode::Dotted,
            ModeArg::Dotless => TranslitMode::Dotless,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    JaOnly,
    AllPositions,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, value_enum, default_value = "dotted")]
    mode: ModeArg,
    /// Mapping table overriding the built-in one.
    #[arg(long, global = true)]
    mapping: Option<PathBuf>,
    /// Comma-separated 1-based line numbers to exclude from both files.
    #[arg(long, global = true, default_value = "")]
    drop_lines: String,
    /// Token list forcing labels (`token<TAB>Heb|JA`).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Transliterate a Judeo-Arabic text file.
    Translit {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Warnings log; defaults to OUTPUT.warnings.log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Tokenize and label a parallel corpus.
    Ingest {
        source: PathBuf,
        reference: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// Write the three-way alignment TSV.
    Align {
        source: PathBuf,
        reference: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Post-correct a transliteration, one section per line.
    Correct {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Exact-match accuracy of an alignment TSV.
    ScoreAccuracy {
        alignment: PathBuf,
        #[arg(long, value_enum, default_value = "ja-only")]
        scope: ScopeArg,
    },
    /// MaxMatch P/R/F of a hypothesis file against gold M2.
    ScoreM2 {
        #[arg(long)]
        gold: PathBuf,
        /// One corrected sentence per gold sentence.
        #[arg(long)]
        hypothesis: PathBuf,
    },
    /// Assign error categories to source/translit/corrected/reference/label rows.
    ClassifyErrors {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Ingest, transliterate, align, correct and score in one run.
    Pipeline {
        source: PathBuf,
        reference: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
        /// Hypothesis column used as the M2 source; defaults to --mode.
        #[arg(long, value_enum)]
        m2_source: Option<ModeArg>,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

impl Global {
    fn table(&self) -> Result<MappingTable> {
        match &self.mapping {
            Some(p) => MappingTable::from_config_file(p).with_context(|| format!("mapping {}", p.display())),
            None => Ok(default_mapping()),
        }
    }

    fn drops(&self) -> Result<BTreeSet<usize>> {
        Ok(parse_drop_lines(&self.drop_lines)?)
    }

    fn lexicon(&self) -> Result<Option<Lexicon>> {
        self.lexicon.as_ref().map(Lexicon::from_file).transpose().map_err(Into::into)
    }

    fn ingest(&self, source: &Path, reference: &Path) -> Result<Ingested> {
        let lexicon = self.lexicon()?;
        let ingested = ingest(source, reference, &self.drops()?, lexicon.as_ref())?;
        for w in &ingested.warnings {
            log::warn!("{w}");
        }
        Ok(ingested)
    }
}

fn print_report(report: &ScoreReport) -> Result<()> {
    println!("{}", report.percent_line());
    println!("{}", serde_json::to_string(report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mode: TranslitMode = g.mode.into();
    match &cli.command {
        Command::Translit { input, output, log } => {
            let text = read(input)?;
            let result = transliterate_text(&text, &g.table()?, mode);
            write(output, &result.text)?;
            let log_path = log.clone().unwrap_or_else(|| {
                let mut name = output.clone().into_os_string();
                name.push(".warnings.log");
                name.into()
            });
            let lines: String = result.warnings.iter().map(|w| format!("{w}\n")).collect();
            write(&log_path, &lines)?;
            if !result.warnings.is_empty() {
                log::warn!("{} warning(s), see {}", result.warnings.len(), log_path.display());
            }
        }
        Command::Ingest { source, reference, output_dir } => {
            let ingested = g.ingest(source, reference)?;
            fs::create_dir_all(output_dir)?;
            let corpus = &ingested.corpus;
            write(&output_dir.join("source_tokens.tsv"), &token_table(corpus.source_tokens()))?;
            write(&output_dir.join("reference_tokens.tsv"), &token_table(corpus.reference_tokens()))?;
            println!("{}", corpus.source_stats().summary_line());
        }
        Command::Align { source, reference, output } => {
            let ingested = g.ingest(source, reference)?;
            let tw = three_way(&ingested.corpus, &g.table()?, &AlignmentCost::default());
            for w in &tw.warnings {
                log::warn!("{w}");
            }
            write(output, &alignment_tsv(&tw.rows))?;
        }
        Command::Correct { input, output, backend } => {
            let settings = backend.settings()?;
            let Some(client) = backend.build()? else {
                bail!("correct needs --backend identity, fixture or http");
            };
            let text = read(input)?;
            let lines: Vec<&str> = text.lines().collect();
            let pending: Vec<usize> = (0..lines.len()).filter(|&i| !lines[i].trim().is_empty()).collect();
            let requests: Vec<_> = pending.iter().map(|&i| settings.request(lines[i])).collect();
            let mut out: Vec<String> = vec![String::new(); lines.len()];
            for (&i, result) in pending.iter().zip(correct_sections(&requests, client.as_ref(), settings.concurrency)) {
                out[i] = result.with_context(|| format!("line {}", i + 1))?.corrected;
            }
            write(output, &out.iter().map(|l| format!("{l}\n")).collect::<String>())?;
        }
        Command::ScoreAccuracy { alignment, scope } => {
            let rows = parse_alignment_tsv(&read(alignment)?)?;
            let outputs: Vec<&str> = rows.iter().map(|r| r.hypothesis(mode)).collect();
            let scope = match scope {
                ScopeArg::JaOnly => AccuracyScope::JaOnly,
                ScopeArg::AllPositions => AccuracyScope::AllPositions,
            };
            print_report(&word_accuracy(&rows, &outputs, scope)?)?;
        }
        Command::ScoreM2 { gold, hypothesis } => {
            let gold = parse_m2(&read(gold)?)?;
            let hyp_text = read(hypothesis)?;
            let hyps: Vec<&str> = hyp_text.lines().collect();
            if hyps.len() != gold.len() {
                bail!("{} hypothesis lines for {} gold sentences", hyps.len(), gold.len());
            }
            let mut counts = Counts::default();
            for (sentence, line) in gold.iter().zip(hyps) {
                let tokens: Vec<String> = tokenize_reference_line(line, 0).into_iter().map(|t| t.surface).collect();
                counts += m2_counts(&extract_edits(&sentence.source, &tokens), &sentence.edits)?;
            }
            print_report(&ScoreReport::from_counts(counts))?;
        }
        Command::ClassifyErrors { input, output } => {
            let rows = parse_error_rows(&read(input)?)?;
            write(output, &error_rows_tsv(&rows, &classify_errors(&rows)))?;
        }
        Command::Pipeline { source, reference, output_dir, m2_source, backend } => {
            let ingested = g.ingest(source, reference)?;
            let config = PipelineConfig {
                mode,
                m2_source: m2_source.map(Into::into),
                table: g.table()?,
                cost: AlignmentCost::default(),
                correction: backend.settings()?,
            };
            let client = backend.build()?;
            if backend.backend == BackendKind::None {
                log::info!("no correction backend; scoring the transliteration as is");
            }
            let report = run_pipeline(&ingested.corpus, &config, client.as_deref())?;
            report.write_to(&ingested.corpus, output_dir)?;
            print!("{}", report.summary_text());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
