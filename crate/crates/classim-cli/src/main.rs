//! Command-line front end for the similarity toolkit.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/validation error,
//! 4 numerical failure. All failures print a single machine-parsable line
//! `error[<kind>]: <message>` on standard error. Diagnostics go to standard
//! error only, controlled by `CLASSIM_LOG={error,info,debug}`.

mod artifacts;
mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "classim",
    version,
    about = "Inter-class similarity from misclassification statistics",
    propagate_version = true
)]
pub struct Cli {
    /// Seed for default dataset splits, synthetic sampling, and training
    /// (when no config file overrides it).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker thread count (default: available parallelism). Outputs are
    /// byte-identical for any value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Machine output format for tables and reports.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Similarity matrix and top-k table from misclassification counts.
    Sim(SimArgs),
    /// Parametric moment-distance matrix and (ascending) top-k table.
    Pd(PdArgs),
    /// Build or evaluate the two-level one-vs-rest model.
    #[command(subcommand)]
    Twolevel(TwolevelCommand),
    /// Synthetic scenarios with known densities: sample or validate.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Pairwise,
    Ovr,
    Multi,
}

#[derive(Args)]
pub struct SimArgs {
    /// Feature CSV (`id,label,f0..[,split]`).
    #[arg(long)]
    pub features: PathBuf,

    /// How misclassification is counted (and which classifiers are trained).
    #[arg(long, value_enum)]
    pub mode: SimMode,

    /// External prediction JSONL covering the validation split; replaces
    /// internal training.
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    /// Training configuration TOML (ignored with --predictions).
    #[arg(long)]
    pub train_config: Option<PathBuf>,

    /// Neighbors per class in the top-k table (clamped to #classes - 1).
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,

    /// Output directory for matrix, top-k table and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct PdArgs {
    /// Feature CSV (`id,label,f0..[,split]`); moments use the train split.
    #[arg(long)]
    pub features: PathBuf,

    /// Neighbors per class in the top-k table (clamped to #classes - 1).
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,

    /// Output directory for matrix, top-k table and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Subcommand)]
pub enum TwolevelCommand {
    /// Train the two-level model from features and a similarity matrix.
    Build(TwolevelBuildArgs),
    /// Compare baseline and two-level routing on the test split.
    Eval(TwolevelEvalArgs),
}

#[derive(Args)]
pub struct TwolevelBuildArgs {
    /// Feature CSV; first level trains on the train split, second level on
    /// train + validation.
    #[arg(long)]
    pub features: PathBuf,

    /// Similarity matrix CSV (as written by `classim sim`).
    #[arg(long)]
    pub sim: PathBuf,

    /// Similar-set selection threshold (strictly-above).
    #[arg(long, default_value_t = classim::twolevel::DEFAULT_SIMILARITY_THRESHOLD)]
    pub threshold: f64,

    /// Output directory for the model tree and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct TwolevelEvalArgs {
    /// Model directory written by `twolevel build`.
    #[arg(long)]
    pub model_dir: PathBuf,

    /// Feature CSV; routing quality is measured on its test split.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleModeArg {
    Ideal,
    Ovr,
    Multi,
}

#[derive(Subcommand)]
pub enum OracleCommand {
    /// Compare estimated similarities against exact density overlaps.
    Run(OracleRunArgs),
    /// Sample a scenario into a feature CSV.
    Sample(OracleSampleArgs),
}

#[derive(Args)]
pub struct OracleRunArgs {
    /// Scenario TOML with class densities, priors and sample counts.
    #[arg(long)]
    pub scenario: PathBuf,

    /// Estimator to validate: optimal decisions, trained one-vs-rest, or
    /// trained multinomial.
    #[arg(long, value_enum)]
    pub mode: OracleModeArg,

    /// Output directory for the validation report and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct OracleSampleArgs {
    /// Scenario TOML with class densities, priors and sample counts.
    #[arg(long)]
    pub scenario: PathBuf,

    /// Output directory for the feature CSV and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("CLASSIM_LOG", "error"),
    )
    .init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error[invalid-parameter]: thread pool: {e}");
            std::process::exit(3);
        }
    }
    if let Err(err) = commands::run(&cli) {
        eprintln!("error[{}]: {err}", err.kind());
        std::process::exit(failure_exit_code(&err));
    }
}

/// Numerical breakdowns and data/contract violations get distinct codes so
/// batch drivers can retry or skip accordingly.
fn failure_exit_code(err: &classim::Error) -> i32 {
    if err.is_numeric() {
        4
    } else {
        3
    }
}
