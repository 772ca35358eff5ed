//! Command-line front end. Every subcommand resolves a config (defaults,
//! then `--config`, then flags), runs, and records the resolved config with a
//! timestamp next to its outputs.
//!
//! Exit codes: 0 success, 1 internal invariant breach, 2 user or input error.

mod commands;
mod config;
mod eval;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::features::Aggregation;
use crate::stats::PerturbTask;

pub use commands::{read_score_lines, ScoreLine};
pub use config::{
    env_seed, load_config, EvalConfig, ExtractConfig, PairConfig, PerturbConfig, ScoreConfig, TrainCmdConfig, SEED_ENV,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USER: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lceval",
    version,
    about = "Learned caption evaluation: features, training, scoring, harnesses"
)]
pub struct Cli {
    /// JSON run config overriding defaults (flags override it in turn).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; defaults to $LCEVAL_SEED, else 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute feature vectors for candidate records.
    Extract(ExtractArgs),
    /// Train the classifier with early stopping on validation τ.
    Train(TrainArgs),
    /// Score feature vectors with a trained model.
    Score(ScoreArgs),
    /// Run an evaluation harness.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Build leave-one-out candidate records from per-image captions.
    Pair(PairArgs),
    /// Generate distractor forced-choice cases.
    Perturb(PerturbArgs),
}

fn parse_aggregation(s: &str) -> Result<Aggregation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> Result<PerturbTask, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Comma-separated layer widths; the empty string means no hidden layer.
fn parse_hidden(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad layer width `{w}`: {e}"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Word-vector text file; required for mowe and wmd.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// CoNLL-style parse sidecar; required for hwcm features.
    #[arg(long)]
    pub parses: Option<PathBuf>,
    /// Records whose references define idf (default: --records).
    #[arg(long)]
    pub idf_records: Option<PathBuf>,
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',', conflicts_with = "lexical_only")]
    pub features: Option<Vec<String>>,
    /// Use only the lexical features (no embeddings or parses needed).
    #[arg(long)]
    pub lexical_only: bool,
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<Aggregation>,
    #[arg(long)]
    pub rouge_beta: Option<f64>,
    #[arg(long)]
    pub cider_sigma: Option<f64>,
    /// Parallel extraction threads.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// History file (default: <out>.history.json).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Hidden layer widths, e.g. "12" or "12,12"; "" for a linear model.
    #[arg(long, value_parser = parse_hidden)]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Pearson, Spearman and Kendall τ-b between scores and human scores.
    Corr(EvalArgs),
    /// Forced-choice accuracy with per-category breakdown.
    Pairwise(EvalArgs),
    /// Accuracy per distractor task (option A is correct).
    Robust(EvalArgs),
    /// Pairwise accuracy as the number of references grows.
    Sweep(EvalArgs),
    /// Pearson between per-system mean scores and human system scores.
    System(EvalArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score file from `score`, or `{"id","a","b"}` option scores for cases.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub cases: Option<PathBuf>,
    /// Score cases with a single feature, e.g. ciderD.
    #[arg(long, conflicts_with = "model")]
    pub metric: Option<String>,
    /// Score cases with a trained model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<Aggregation>,
    /// Expected robustness tasks (comma-separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    pub tasks: Option<Vec<PerturbTask>>,
    #[arg(long)]
    pub max_refs: Option<usize>,
    /// JSON object of human scores per system.
    #[arg(long)]
    pub human_systems: Option<PathBuf>,
    /// Write the report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub refs_per_candidate: Option<usize>,
    #[arg(long)]
    pub human_candidates: Option<usize>,
    #[arg(long)]
    pub shared_machine_refs: bool,
    /// Keep only these machine systems (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub systems: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub lexicons: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    pub tasks: Option<Vec<PerturbTask>>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                EXIT_INTERNAL
            } else {
                EXIT_USER
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let seed = match cli.seed {
        Some(s) => s,
        None => env_seed()?,
    };
    let base = Base {
        config: cli.config,
        seed,
        seed_flag: cli.seed,
    };
    match cli.command {
        Command::Extract(a) => commands::extract(&base, a),
        Command::Train(a) => commands::train(&base, a),
        Command::Score(a) => commands::score(&base, a),
        Command::Eval(e) => eval::eval(&base, e),
        Command::Pair(a) => commands::pair(&base, a),
        Command::Perturb(a) => commands::perturb(&base, a),
    }
}

/// Global options shared by every subcommand.
pub(crate) struct Base {
    config: Option<PathBuf>,
    /// `--seed`, else `$LCEVAL_SEED`, else 0.
    seed: u64,
    seed_flag: Option<u64>,
}

impl Base {
    /// Defaults, then the config file, then the `--seed` flag.
    fn resolve<T>(&self, defaults: T, set_seed: impl FnOnce(&mut T, u64)) -> Result<T>
    where
        T: serde::Serialize + serde::de::DeserializeOwned,
    {
        let mut cfg = match &self.config {
            Some(path) => load_config(path, defaults)?,
            None => defaults,
        };
        if let Some(s) = self.seed_flag {
            set_seed(&mut cfg, s);
        }
        Ok(cfg)
    }
}
