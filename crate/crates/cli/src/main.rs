//! `fitb`: train and evaluate outfit-completion rankers from the command
//! line. Exit codes: 0 success, 1 usage error (bad flags, bad config,
//! missing required settings), 2 data error (unreadable or malformed files,
//! failed pipeline runs).

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::ConfigFile;

/// Usage errors exit 1, data errors exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(err) | CliError::Data(err) => write!(f, "{err:#}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "fitb",
    version,
    about = "Fill-in-the-blank outfit completion over precomputed product embeddings"
)]
struct Cli {
    /// Optional `key = value` config file; flags override file entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a JSONL embedding dump into the binary embedding format.
    Ingest(IngestArgs),
    /// Generate a clustered synthetic dataset for experiments.
    GenSynthetic(GenSyntheticArgs),
    /// Split outfits into train/test and derive test queries.
    Split(SplitArgs),
    /// Train a projection head and save its checkpoint.
    Train(TrainArgs),
    /// Score queries and report accuracy and mean reciprocal rank.
    Eval(EvalArgs),
    /// Rank candidates for each query and emit the orderings.
    Predict(PredictArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// JSONL file, one {"product_id", "vector"} object per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Which modality the vectors belong to: image or text.
    #[arg(long)]
    modality: Option<String>,
    /// Destination embedding file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenSyntheticArgs {
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    products_per_cluster: Option<usize>,
    #[arg(long)]
    outfit_size: Option<usize>,
    #[arg(long)]
    d_img: Option<usize>,
    #[arg(long)]
    d_txt: Option<usize>,
    /// Noise standard deviation around each cluster center.
    #[arg(long)]
    sigma: Option<f64>,
    /// Give image and text embeddings different cluster structure.
    #[arg(long)]
    modality_split: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the generated files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Outfits JSONL to partition.
    #[arg(long)]
    outfits: Option<PathBuf>,
    /// Fraction of outfits held out for testing, in [0, 1].
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Candidates per generated query (one gold + distractors).
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the split files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training outfits JSONL.
    #[arg(long)]
    outfits: Option<PathBuf>,
    #[arg(long)]
    image_emb: Option<PathBuf>,
    #[arg(long)]
    text_emb: Option<PathBuf>,
    /// Representation mode: image, text, or both.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Contrastive margin for negative pairs.
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer: adam or sgd.
    #[arg(long)]
    optimizer: Option<String>,
    /// Momentum for sgd; ignored by adam.
    #[arg(long)]
    momentum: Option<f64>,
    /// Negative pairs sampled per positive pair.
    #[arg(long)]
    negatives: Option<usize>,
    /// Cap on positive pairs drawn from one outfit.
    #[arg(long)]
    max_positives: Option<usize>,
    /// Comma-separated head widths, e.g. 512,128.
    #[arg(long)]
    layer_dims: Option<String>,
    /// Redraw training pairs each epoch: true or false.
    #[arg(long)]
    resample: Option<bool>,
    /// Checkpoint path to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Queries JSONL with gold indices.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    image_emb: Option<PathBuf>,
    #[arg(long)]
    text_emb: Option<PathBuf>,
    /// Representation mode: image, text, or both.
    #[arg(long)]
    mode: Option<String>,
    /// Scorer: zeroshot or head.
    #[arg(long)]
    scorer: Option<String>,
    /// Distance aggregation over outfit items: mean or min.
    #[arg(long)]
    aggregation: Option<String>,
    /// Trained head checkpoint; required by --scorer head.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the report JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Queries JSONL; gold indices are not needed.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    image_emb: Option<PathBuf>,
    #[arg(long)]
    text_emb: Option<PathBuf>,
    /// Representation mode: image, text, or both.
    #[arg(long)]
    mode: Option<String>,
    /// Scorer: zeroshot or head.
    #[arg(long)]
    scorer: Option<String>,
    /// Distance aggregation over outfit items: mean or min.
    #[arg(long)]
    aggregation: Option<String>,
    /// Trained head checkpoint; required by --scorer head.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write rankings JSONL here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest(args) => commands::ingest(args, &cfg),
        Command::GenSynthetic(args) => commands::gen_synthetic(args, &cfg),
        Command::Split(args) => commands::split(args, &cfg),
        Command::Train(args) => commands::train_cmd(args, &cfg),
        Command::Eval(args) => commands::eval(args, &cfg),
        Command::Predict(args) => commands::predict(args, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FITB_LOG", "info")).init();
    // Clap treats usage problems as exit 2 by default; remap to the 0/1
    // convention used here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().expect("writing clap output");
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error ({}): {err}", err.kind());
            ExitCode::from(err.exit_code())
        }
    }
}
