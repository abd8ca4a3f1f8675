//! Command-line surface tying the pipeline together. All subcommands write a
//! machine-readable report plus a human-readable summary into the output
//! directory, and every run embeds its configuration and seed so reruns are
//! byte-identical.

mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Flag combinations clap cannot express (counted as usage errors).
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Classify(#[from] crate::classify::ClassifyError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Allotax(#[from] crate::allotax::AllotaxError),
    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),
    #[error(transparent)]
    Demo(#[from] crate::demographics::DemoError),
    #[error(transparent)]
    Awry(#[from] crate::awry::AwryError),
}

#[derive(Debug, Parser)]
#[command(
    name = "verdict",
    about = "Batch pipeline for judgement-valence analytics over Reddit-style dumps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse post/comment dumps, rebuild threads, filter, and persist the
    /// corpus.
    Ingest(IngestArgs),
    /// Extract prefix labels from top-level comments into the labeled
    /// corpus.
    Label(LabelArgs),
    /// Train the naive Bayes model (optionally cross-validating first).
    Train(TrainArgs),
    /// Cross-validation report without saving a model.
    Eval(EvalArgs),
    /// Apply a model or imported predictions to judge every post.
    Classify(ClassifyArgs),
    /// Rank-turbulence divergence between the two valence classes.
    Allotax(AllotaxArgs),
    /// Popularity, user, and demographics analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Conversation-derailment transfer evaluation.
    Awry(AwryArgs),
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Mann-Whitney popularity tests and cumulative positive-ratio curves.
    Popularity(PopularityArgs),
    /// User tallies, negativity p-values, Lorenz/Gini, negativity curves.
    Users(UsersArgs),
    /// Gender/age contingency and logistic-regression analyses.
    Demographics(DemographicsArgs),
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Newline-delimited post dump.
    #[arg(long)]
    posts: PathBuf,
    /// Newline-delimited comment dump.
    #[arg(long)]
    comments: PathBuf,
    /// Keep only threads with at least this many comments.
    #[arg(long, default_value_t = 0)]
    min_comments: usize,
    /// Inclusive lower bound on post date (YYYY-MM-DD).
    #[arg(long)]
    from: Option<String>,
    /// Inclusive upper bound on post date (YYYY-MM-DD).
    #[arg(long)]
    to: Option<String>,
    /// Comma-separated subreddit allow-list.
    #[arg(long)]
    subreddits: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct LabelArgs {
    /// Corpus directory produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Labeled corpus produced by `label`.
    #[arg(long)]
    labeled: PathBuf,
    /// Model kind; only `nb` trains natively.
    #[arg(long, default_value = "nb")]
    model: String,
    /// Additive smoothing pseudo-count.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Also run k-fold cross-validation before training on everything.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    /// Labeled corpus (text for nb, truth labels for logreg).
    #[arg(long)]
    labeled: PathBuf,
    /// Model kind: `nb` or `logreg` (logreg requires --features).
    #[arg(long, default_value = "nb")]
    model: String,
    /// Imported feature vectors (comment_id,f0,...).
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    /// Corpus directory produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Imported prediction CSV (comment_id,valence,score).
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AllotaxArgs {
    /// Labeled corpus produced by `label`.
    #[arg(long)]
    labeled: PathBuf,
    /// Rank-turbulence divergence exponent.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
    /// Terms listed per side in the report.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PopularityArgs {
    /// Post-judgement CSV produced by `classify`.
    #[arg(long)]
    judgements: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct UsersArgs {
    /// Corpus directory produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    external: Option<PathBuf>,
    /// Keep users judged at least this many times.
    #[arg(long, default_value_t = 50)]
    min_judged: u64,
    /// Override the binomial null rate (defaults to the observed global
    /// negative fraction).
    #[arg(long)]
    null_rate: Option<f64>,
    /// Comma-separated negativity-threshold grid.
    #[arg(long, default_value = "1e-6,1e-5,1e-4,1e-3,0.01,0.02,0.05,0.1,0.2,0.3,0.5,0.75,1.0")]
    thresholds: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DemographicsArgs {
    /// Corpus directory produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    external: Option<PathBuf>,
    /// Poster-tag attribution policy.
    #[arg(long, value_enum, default_value_t = AttributionArg::FirstPersonTag)]
    attribution: AttributionArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum AttributionArg {
    #[value(name = "first-tag")]
    FirstTag,
    #[value(name = "first-person-tag")]
    FirstPersonTag,
}

impl From<AttributionArg> for crate::demographics::Attribution {
    fn from(a: AttributionArg) -> Self {
        match a {
            AttributionArg::FirstTag => crate::demographics::Attribution::FirstTag,
            AttributionArg::FirstPersonTag => crate::demographics::Attribution::FirstPersonTag,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct AwryArgs {
    /// Newline-delimited conversation records.
    #[arg(long)]
    conversations: PathBuf,
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    mode: AwryMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AwryMode {
    Offline,
    Online,
}

/// Run the CLI against the given argument vector and return the process exit
/// code: 0 success, 1 usage error, 2 data error.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => commands::run_ingest(args),
        Command::Label(args) => commands::run_label(args),
        Command::Train(args) => commands::run_train(args),
        Command::Eval(args) => commands::run_eval(args),
        Command::Classify(args) => commands::run_classify(args),
        Command::Allotax(args) => commands::run_allotax(args),
        Command::Analyze(AnalyzeCommand::Popularity(args)) => commands::run_popularity(args),
        Command::Analyze(AnalyzeCommand::Users(args)) => commands::run_users(args),
        Command::Analyze(AnalyzeCommand::Demographics(args)) => commands::run_demographics(args),
        Command::Awry(args) => commands::run_awry(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            EXIT_USAGE
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_DATA
        }
    }
}

/// Resolve the output directory: --out flag, then VERDICT_OUT.
fn resolve_out(out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    if let Some(path) = out {
        return Ok(path.clone());
    }
    if let Some(env) = std::env::var_os("VERDICT_OUT") {
        return Ok(PathBuf::from(env));
    }
    Err(CliError::Usage(
        "--out is required (or set VERDICT_OUT)".into(),
    ))
}

/// Inclusive YYYY-MM-DD bounds to epoch seconds; the upper bound covers the
/// whole day.
fn parse_date_bound(s: &str, end_of_day: bool) -> Result<i64, CliError> {
    let date = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| CliError::Usage(format!("bad date {s:?}: {e}")))?;
    let time = if end_of_day {
        date.and_hms_opt(23, 59, 59).unwrap()
    } else {
        date.and_hms_opt(0, 0, 0).unwrap()
    };
    Ok(time.and_utc().timestamp())
}
