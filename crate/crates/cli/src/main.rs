//! Command-line front end: wires the lexicon, tokenizer, corpus, evaluator,
//! metrics, and stats modules into the analysis pipeline and emits
//! figure-ready CSV/JSON reports.
//!
//! Exit codes: 0 on success, 2 on input or validation errors, 3 on internal
//! invariant violations.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tokbias_core::stats::JtMode;

#[derive(Parser)]
#[command(name = "tokbias", version, about = "Gender-bias, tokenization, and frequency analysis for MT output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Token-count histograms of the lexicon forms (by gender and by stereotype)
    Tokens(TokensArgs),
    /// Score translations: per-form F1, aggregate accuracy/ΔG/ΔS, pair metrics
    Eval(EvalArgs),
    /// Correlations and the conditional-independence test over pair metrics
    Analyze(AnalyzeArgs),
    /// Surface-form frequency table (and form-ratio report when a lexicon is given)
    Freq(FreqArgs),
    /// Add every lexicon form to the vocabulary so it segments as one token
    ProtectVocab(ProtectVocabArgs),
    /// Train a unigram vocabulary on a corpus
    TrainTokenizer(TrainTokenizerArgs),
    /// Generate the gender-balanced bilingual template dataset
    GenDataset(GenDatasetArgs),
    /// Corpus BLEU between a hypotheses file and a references file
    Bleu(BleuArgs),
    /// Run tokens, eval, and analyze in sequence for one language
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Language code recorded in reports (defaults to the lexicon's)
    #[arg(long)]
    lang: Option<String>,
    /// Directory for all output files
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for every randomized procedure
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Clone)]
struct MatchOpts {
    /// Case-fold text before counting and matching
    #[arg(long)]
    case_fold: bool,
    /// File with one clitic prefix per line (e.g. Hebrew definiteness),
    /// stripped at match and query time
    #[arg(long)]
    strip_prefixes: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct StatOpts {
    /// Number of frequency quantile strata for the conditional-independence test
    #[arg(long, default_value_t = 3)]
    strata: usize,
    /// Statistic computation mode
    #[arg(long, value_enum, default_value_t = StatMode::Auto)]
    stat_mode: StatMode,
    /// Also run the conditional-independence test on the male-only and
    /// female-only form records (the default pools both genders)
    #[arg(long)]
    ci_per_gender: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatMode {
    Auto,
    Exact,
    Normal,
}

impl From<StatMode> for JtMode {
    fn from(mode: StatMode) -> JtMode {
        match mode {
            StatMode::Auto => JtMode::Auto,
            StatMode::Exact => JtMode::Exact,
            StatMode::Normal => JtMode::Normal,
        }
    }
}

#[derive(Args)]
struct TokensArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    winomt: PathBuf,
    /// Translations, one per line, aligned with the WinoMT instances
    #[arg(long)]
    outputs: PathBuf,
    /// Vocabulary for pair token counts (enables the pair-metrics export)
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Corpus for form frequencies (enables the pair-metrics export)
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    matching: MatchOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    winomt: PathBuf,
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    matching: MatchOpts,
    #[command(flatten)]
    stats: StatOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct FreqArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Lexicon for the gender-form ratio report
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// File with one neutral form per line, counted into the ratio report
    #[arg(long)]
    neutral_forms: Option<PathBuf>,
    #[command(flatten)]
    matching: MatchOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct ProtectVocabArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct TrainTokenizerArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, default_value_t = 2000)]
    seed_size: usize,
    #[arg(long, default_value_t = 4)]
    em_iterations: usize,
    #[arg(long, default_value_t = 0.2)]
    prune_fraction: f64,
    #[arg(long, default_value_t = 8)]
    max_token_length: usize,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct GenDatasetArgs {
    #[arg(long)]
    lexicon: PathBuf,
    /// Target-side male sentence pattern with one `{}` placeholder
    #[arg(long)]
    male_pattern: String,
    /// Target-side female sentence pattern with one `{}` placeholder
    #[arg(long)]
    female_pattern: String,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct BleuArgs {
    #[arg(long)]
    hypotheses: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    winomt: PathBuf,
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    matching: MatchOpts,
    #[command(flatten)]
    stats: StatOpts,
    #[command(flatten)]
    common: CommonOpts,
}

/// Input/validation failures exit with 2, internal invariant violations with 3.
pub(crate) enum CliError {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    fn input(err: impl Into<anyhow::Error>) -> Self {
        CliError::Input(err.into())
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::input(err)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tokens(args) => commands::tokens(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Freq(args) => commands::freq(&args),
        Command::ProtectVocab(args) => commands::protect_vocab(&args),
        Command::TrainTokenizer(args) => commands::train_tokenizer(&args),
        Command::GenDataset(args) => commands::gen_dataset(&args),
        Command::Bleu(args) => commands::bleu_cmd(&args),
        Command::Pipeline(args) => commands::pipeline(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("internal error: {err:#}");
            ExitCode::from(3)
        }
    }
}
