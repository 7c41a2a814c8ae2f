//! The `pressflow` command line.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, bad config file, missing
//! required setting), 2 data or validation error.

mod config;
mod stages;
pub mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::*;
pub use stages::*;

use crate::corpus::YearRange;
use crate::dataset::{Mode, TargetKind};
use crate::eval::SplitBy;
use crate::model::{Activation, LossKind, OptimizerKind};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Parser, Debug)]
#[command(
    name = "pressflow",
    version,
    about = "Score news sentiment per U.S. state and relate it to census migration flows"
)]
pub struct Cli {
    /// Seed for splitting, initialisation and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scoring, tagging and prediction.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with a table per subcommand; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score every article with the rule-based sentiment analyzer.
    Score(ScoreArgs),
    /// Tag every article with the states it mentions.
    Tag(TagArgs),
    /// Validate and summarise the yearly flow tables.
    IngestCensus(IngestArgs),
    /// Aggregate the state-year grid and join it with flows.
    BuildDataset(BuildArgs),
    /// Train the feedforward network (and optionally the logistic baseline).
    Train(TrainArgs),
    /// Predict with a trained checkpoint.
    Predict(PredictArgs),
    /// Held-out mean absolute error, comparison table and figures.
    Evaluate(EvaluateArgs),
    /// Regenerate figures and a text summary from a saved report.
    Report(ReportArgs),
    /// Run every stage in order.
    Pipeline(PipelineArgs),
    /// Write a planted-signal corpus and census fixture.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long, num_args = 1..)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Token-valence TSV; the bundled lexicon is used when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// Inclusive `start:end`, default 2010:2019.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub strict: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TagArgs {
    #[arg(long, num_args = 1..)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// TOML gazetteer override.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub strict: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    /// Directory of `flows_<year>.csv` files.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Vector mode target per state.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    /// Fill state-years without articles with 0 instead of failing.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub allow_missing: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    /// Hidden layer widths, comma separated (default 64,64).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// Training fraction.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_by: Option<SplitBy>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_epochs: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also fit the logistic baseline (pairwise datasets) and save it here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_curve_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ckpt: Option<PathBuf>,
    /// A dataset file, or a CSV with a header and one input row per line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub clamp_nonnegative: bool,
    /// Defaults to standard output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_by: Option<SplitBy>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Flow tables, for the census margin-of-error context line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub clamp_nonnegative: bool,
    /// Logistic baseline checkpoint to score on the same test rows.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// A `report.json` written by `evaluate`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PipelineArgs {
    #[arg(long, num_args = 1..)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub strict: bool,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub allow_missing: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub clamp_nonnegative: bool,
    /// Generate the planted-signal fixture (default settings unless the
    /// config file has a `[pipeline.synthetic]` table) and run on it.
    #[arg(long)]
    #[serde(skip)]
    pub synthetic: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<YearRange>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub articles_per_cell: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    /// Flow change per unit of sentiment difference; 0 gives a null fixture.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<UsageError>() {
            Ok(u) => Failure::Usage(u.0),
            Err(e) => Failure::Data(e),
        }
    }
}

fn resolved<A: Serialize, C>(section: &str, file: &ConfigFile, seed: Option<u64>, args: &A) -> Result<C, Failure>
where
    C: Serialize + serde::de::DeserializeOwned + Default,
{
    resolve(section, file, seed, args).map_err(Failure::Usage)
}

fn echo_to(dir: &std::path::Path, section: &str, config: &impl Serialize) -> Result<(), Failure> {
    write_echo(dir, section, config).map_err(|e| Failure::Data(e.into()))
}

fn out_parent(path: &Option<PathBuf>) -> Option<PathBuf> {
    path.as_ref().map(|p| match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    })
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(Failure::Usage)?,
        None => ConfigFile::default(),
    };
    let verbosity = cli.verbose.max(file.verbose.unwrap_or(0));
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.threads.or(file.threads) {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised; --threads ignored");
        }
    }
    let seed = cli.seed;

    match &cli.command {
        Command::Score(a) => {
            let c: ScoreConfig = resolved("score", &file, seed, a)?;
            run_score(&c)?;
            if let Some(d) = out_parent(&c.out) {
                echo_to(&d, "score", &c)?;
            }
        }
        Command::Tag(a) => {
            let c: TagConfig = resolved("tag", &file, seed, a)?;
            run_tag(&c)?;
            if let Some(d) = out_parent(&c.out) {
                echo_to(&d, "tag", &c)?;
            }
        }
        Command::IngestCensus(a) => {
            let c: IngestConfig = resolved("ingest-census", &file, seed, a)?;
            run_ingest(&c)?;
        }
        Command::BuildDataset(a) => {
            let c: BuildConfig = resolved("build-dataset", &file, seed, a)?;
            run_build(&c)?;
            if let Some(d) = out_parent(&c.out) {
                echo_to(&d, "build-dataset", &c)?;
            }
        }
        Command::Train(a) => {
            let c: TrainConfig = resolved("train", &file, seed, a)?;
            run_train(&c)?;
            if let Some(d) = out_parent(&c.out) {
                echo_to(&d, "train", &c)?;
            }
        }
        Command::Predict(a) => {
            let c: PredictConfig = resolved("predict", &file, seed, a)?;
            run_predict(&c)?;
            if let Some(d) = out_parent(&c.out) {
                echo_to(&d, "predict", &c)?;
            }
        }
        Command::Evaluate(a) => {
            let c: EvaluateConfig = resolved("evaluate", &file, seed, a)?;
            run_evaluate(&c)?;
            if let Some(d) = &c.out_dir {
                echo_to(d, "evaluate", &c)?;
            }
        }
        Command::Report(a) => {
            let c: ReportConfig = resolved("report", &file, seed, a)?;
            run_report(&c)?;
            if let Some(d) = &c.out_dir {
                echo_to(d, "report", &c)?;
            }
        }
        Command::Pipeline(a) => {
            let mut c: PipelineConfig = resolved("pipeline", &file, seed, a)?;
            if a.synthetic && c.synthetic.is_none() {
                c.synthetic = Some(synth::SyntheticConfig::default());
            }
            echo_to(&c.out_dir, "pipeline", &c)?;
            run_pipeline(&c)?;
        }
        Command::Synth(a) => {
            let c: SynthConfig = resolved("synth", &file, seed, a)?;
            run_synth(&c)?;
            if let Some(d) = &c.out_dir {
                echo_to(d, "synth", &c)?;
            }
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs, and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
