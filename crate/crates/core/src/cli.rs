//! Command-line front end: `decode`, `train-lm`, `bench`, `analyze-placement`.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bench_run, pearson_r, placement_pairs, write_csv, BenchConfig};
use crate::constraints::ConstraintSet;
use crate::decoder::{decode_request, Algorithm, DecodeConfig};
use crate::error::{Error, Result};
use crate::request::DecodeRequest;
use crate::scorer::{NGramLm, Scorer, SyntheticScorer, TableScorer, UniformScorer, DEFAULT_ALPHA, DEFAULT_ORDER};
use crate::vocab::Vocabulary;
use crate::TokenId;

#[derive(Debug, Parser)]
#[command(name = "lexbeam", version, about = "Lexically constrained beam search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode JSONL requests, one result line per input line.
    Decode(DecodeArgs),
    /// Train an add-alpha n-gram language model.
    TrainLm(TrainLmArgs),
    /// Time DBA and GBS on synthetic sentences; writes CSV.
    Bench(BenchArgs),
    /// Correlate constraint positions in references and outputs.
    AnalyzePlacement(PlacementArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Beam,
    Dba,
    Gbs,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Beam => Algorithm::Beam,
            AlgorithmArg::Dba => Algorithm::Dba,
            AlgorithmArg::Gbs => Algorithm::Gbs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Uniform,
    Table,
    Ngram,
    Synthetic,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Input JSONL (default: stdin).
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output JSONL (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dba")]
    pub algorithm: AlgorithmArg,
    /// Beam size k [default: 10]. Not used with --algorithm gbs.
    #[arg(long)]
    pub beam_size: Option<usize>,
    /// Pruning threshold in log-probability; 0 disables.
    #[arg(long, default_value_t = 20.0)]
    pub prune: f64,
    #[arg(long, default_value_t = 50)]
    pub max_length: usize,
    #[arg(long)]
    pub early_stopping: bool,
    /// Slots per bank for grid beam search [default: 10]. Only with --algorithm gbs.
    #[arg(long)]
    pub gbs_base_beam: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform")]
    pub scorer: ScorerKind,
    /// Model file: n-gram JSON for `ngram`, context table JSON for `table`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary file, one token per line. `ngram` reads it from the model.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Vocabulary size for `synthetic` when no --vocab is given.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Seed for the `synthetic` scorer.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sentences decoded concurrently. Output order is unaffected.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    /// Training text, one whitespace-tokenized sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Vocabulary file; built from the corpus when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Where to write the model JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the vocabulary used.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    /// Print P(token | context) after training. Context is space-separated
    /// and may be empty.
    #[arg(long, requires = "query_token")]
    pub query_context: Option<String>,
    #[arg(long, requires = "query_context")]
    pub query_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated constraint counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,12")]
    pub c_values: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dba,gbs")]
    pub algorithms: Vec<AlgorithmArg>,
    /// Full vocabulary size, BOS included
    #[arg(long, default_value_t = 10_001)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 50)]
    pub sentences: usize,
    #[arg(long, default_value_t = 10)]
    pub beam_size: usize,
    #[arg(long, default_value_t = 10)]
    pub gbs_base_beam: usize,
    #[arg(long, default_value_t = 30)]
    pub max_length: usize,
    #[arg(long, default_value_t = 20.0)]
    pub prune: f64,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlacementArgs {
    /// JSONL lines of {"constraints": [...], "reference": "...", "output": "..."}.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
}

/// One line of decode output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: Option<String>,
    pub translation: String,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub constraints_met: bool,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    id: Option<&'a str>,
    line: usize,
    error: String,
}

#[derive(Debug, Deserialize)]
struct PlacementLine {
    constraints: Vec<String>,
    reference: String,
    output: String,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run_from<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Decode(a) => run_decode(&a, stdin, stdout, stderr),
        Command::TrainLm(a) => run_train_lm(&a, stdout),
        Command::Bench(a) => run_bench(&a, stdout),
        Command::AnalyzePlacement(a) => run_analyze(&a, stdin, stdout),
    }
}

fn read_input(path: Option<&Path>, stdin: &mut dyn Read) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn with_output<F>(path: Option<&Path>, stdout: &mut dyn Write, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            f(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn decode_config(a: &DecodeArgs) -> Result<DecodeConfig> {
    let algorithm = Algorithm::from(a.algorithm);
    if algorithm == Algorithm::Gbs && a.beam_size.is_some() {
        return Err(Error::Config(
            "--beam-size does not apply to --algorithm gbs; use --gbs-base-beam".into(),
        ));
    }
    if algorithm != Algorithm::Gbs && a.gbs_base_beam.is_some() {
        return Err(Error::Config("--gbs-base-beam requires --algorithm gbs".into()));
    }
    let defaults = DecodeConfig::default();
    let config = DecodeConfig {
        algorithm,
        beam_size: a.beam_size.unwrap_or(defaults.beam_size),
        max_length: a.max_length,
        prune_threshold: a.prune,
        early_stopping: a.early_stopping,
        gbs_base_beam: a.gbs_base_beam.unwrap_or(defaults.gbs_base_beam),
    };
    config.validate()?;
    Ok(config)
}

type SharedScorer = Box<dyn Scorer + Send + Sync>;

fn build_scorer(a: &DecodeArgs) -> Result<(Vocabulary, SharedScorer)> {
    let vocab = a.vocab.as_deref().map(Vocabulary::load).transpose()?;
    let need_vocab = || vocab.clone().ok_or_else(|| Error::Config("--vocab is required for this scorer".into()));
    let need_model = || a.model.as_deref().ok_or_else(|| Error::Config("--model is required for this scorer".into()));
    Ok(match a.scorer {
        ScorerKind::Uniform => {
            let v = need_vocab()?;
            let s = UniformScorer::new(&v);
            (v, Box::new(s))
        }
        ScorerKind::Table => {
            let v = need_vocab()?;
            let s = TableScorer::load(need_model()?, &v)?;
            (v, Box::new(s))
        }
        ScorerKind::Ngram => {
            let lm = NGramLm::load(need_model()?)?;
            if let Some(v) = &vocab {
                if v != lm.vocab() {
                    return Err(Error::Config("--vocab differs from the model's vocabulary".into()));
                }
            }
            (lm.vocab().clone(), Box::new(lm))
        }
        ScorerKind::Synthetic => {
            let v = match (&vocab, a.vocab_size) {
                (Some(v), None) => v.clone(),
                (None, Some(n)) => Vocabulary::synthetic(n)?,
                (None, None) => return Err(Error::Config("synthetic scorer needs --vocab or --vocab-size".into())),
                (Some(_), Some(_)) => return Err(Error::Config("give either --vocab or --vocab-size, not both".into())),
            };
            let s = SyntheticScorer::for_vocab(a.seed, &v)?;
            (v, Box::new(s))
        }
    })
}

enum LineOutcome {
    Ok { record: OutputRecord, unknown: Vec<String> },
    Failed { id: Option<String>, error: String },
}

fn decode_line(line: &str, scorer: &SharedScorer, vocab: &Vocabulary, config: &DecodeConfig) -> LineOutcome {
    let req: DecodeRequest = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            return LineOutcome::Failed {
                id: None,
                error: format!("malformed JSON: {e}"),
            }
        }
    };
    match decode_request(scorer, vocab, &req, config) {
        Ok(out) => LineOutcome::Ok {
            record: OutputRecord {
                id: req.id,
                translation: out.result.output_text,
                raw_score: out.result.raw_score,
                normalized_score: out.result.normalized_score,
                constraints_met: out.result.constraints_met,
                steps: out.result.steps_used,
            },
            unknown: out.unknown_tokens,
        },
        Err(e) => LineOutcome::Failed {
            id: req.id,
            error: e.to_string(),
        },
    }
}

pub fn run_decode(a: &DecodeArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let config = decode_config(a)?;
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let (vocab, scorer) = build_scorer(a)?;
    let text = read_input(a.input.as_deref(), stdin)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();

    let outcomes: Vec<LineOutcome> = if a.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            lines
                .par_iter()
                .map(|(_, l)| decode_line(l, &scorer, &vocab, &config))
                .collect()
        })
    } else {
        lines.iter().map(|(_, l)| decode_line(l, &scorer, &vocab, &config)).collect()
    };

    let mut failures = 0;
    with_output(a.output.as_deref(), stdout, |w| {
        for ((lineno, _), outcome) in lines.iter().zip(&outcomes) {
            match outcome {
                LineOutcome::Ok { record, unknown } => {
                    for u in unknown {
                        writeln!(stderr, "line {lineno}: warning: constraint token {u:?} not in vocabulary, using <unk>")?;
                    }
                    serde_json::to_writer(&mut *w, record)?;
                }
                LineOutcome::Failed { id, error } => {
                    failures += 1;
                    writeln!(stderr, "line {lineno}: {error}")?;
                    serde_json::to_writer(
                        &mut *w,
                        &ErrorRecord {
                            id: id.as_deref(),
                            line: *lineno,
                            error: error.clone(),
                        },
                    )?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn vocab_from_corpus(lines: &[&str]) -> Result<Vocabulary> {
    let mut seen = std::collections::HashSet::new();
    let mut words = Vec::new();
    for w in lines.iter().flat_map(|l| l.split_whitespace()) {
        if [crate::vocab::BOS_SURFACE, crate::vocab::EOS_SURFACE, crate::vocab::UNK_SURFACE].contains(&w) {
            continue;
        }
        if seen.insert(w) {
            words.push(w);
        }
    }
    Vocabulary::with_words(words)
}

pub fn run_train_lm(a: &TrainLmArgs, stdout: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(&a.corpus).map_err(|e| Error::Config(format!("{}: {e}", a.corpus.display())))?;
    let lines: Vec<&str> = text.lines().collect();
    let vocab = match &a.vocab {
        Some(p) => Vocabulary::load(p)?,
        None => vocab_from_corpus(&lines)?,
    };
    let lm = NGramLm::train(&lines, a.order, a.alpha, &vocab)?;
    if let Some(p) = &a.output {
        lm.save(p)?;
    }
    if let Some(p) = &a.vocab_out {
        vocab.save(p)?;
    }
    writeln!(
        stdout,
        "trained order-{} model, alpha {}, {} contexts, vocabulary {}",
        lm.order(),
        lm.alpha(),
        lm.num_contexts(),
        vocab.len()
    )?;
    if let (Some(ctx), Some(tok)) = (&a.query_context, &a.query_token) {
        let mut history = vec![vocab.bos()];
        history.extend(ctx.split_whitespace().map(|w| vocab.lookup(w)));
        let context = lm.context_of(&history);
        let token = vocab.lookup(tok);
        let p = lm.probability(&context, token);
        writeln!(stdout, "P({tok} | {}) = {p}", ctx.trim())?;
        writeln!(stdout, "log P = {}", p.ln())?;
    }
    Ok(0)
}

pub fn run_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = BenchConfig {
        vocab_size: a.vocab_size,
        sentences: a.sentences,
        c_values: a.c_values.clone(),
        algorithms: a.algorithms.iter().map(|&x| x.into()).collect(),
        decode: DecodeConfig {
            beam_size: a.beam_size,
            gbs_base_beam: a.gbs_base_beam,
            max_length: a.max_length,
            prune_threshold: a.prune,
            ..DecodeConfig::default()
        },
        repetitions: a.repetitions,
        seed: a.seed,
    };
    let records = bench_run(&config)?;
    with_output(a.output.as_deref(), stdout, |w| write_csv(&records, w))?;
    Ok(0)
}

/// Assigns ids to surfaces on first sight, so phrases and sentences can be
/// compared as token sequences without a vocabulary file.
#[derive(Default)]
struct Interner(HashMap<String, TokenId>);

impl Interner {
    fn ids(&mut self, text: &str) -> Vec<TokenId> {
        text.split_whitespace()
            .map(|w| {
                let next = self.0.len() as TokenId;
                *self.0.entry(w.to_string()).or_insert(next)
            })
            .collect()
    }
}

pub fn run_analyze(a: &PlacementArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<i32> {
    let text = read_input(a.input.as_deref(), stdin)?;
    let mut interner = Interner::default();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (i, line) in BufReader::new(text.as_bytes()).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PlacementLine = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("line {}: malformed JSON: {e}", i + 1)))?;
        let phrases: Vec<Vec<TokenId>> = rec.constraints.iter().map(|c| interner.ids(c)).collect();
        let set = ConstraintSet::new(phrases).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        let reference = interner.ids(&rec.reference);
        let output = interner.ids(&rec.output);
        if reference.is_empty() || output.is_empty() {
            return Err(Error::Config(format!("line {}: empty reference or output", i + 1)));
        }
        let p = placement_pairs(&set, &reference, &output);
        pairs.extend(p.pairs);
        skipped += p.skipped;
    }
    writeln!(stdout, "pairs: {}", pairs.len())?;
    writeln!(stdout, "skipped: {skipped}")?;
    let r = pearson_r(&pairs)?;
    writeln!(stdout, "pearson_r: {r}")?;
    Ok(0)
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let mut stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    run_from(std::env::args_os(), &mut stdin, &mut stdout, &mut stderr)
}
