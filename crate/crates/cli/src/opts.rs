//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "streamcart",
    about = "Single-pass streaming CART learner with controller/mapper/reducer rounds",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a tree over a stream; writes model.tree, rounds.tsv and
    /// per-round stats files.
    Train(TrainArgs),
    /// Evaluate a saved model on a stream (predict-only).
    Eval(EvalArgs),
    /// Run a parameter sweep (batch | attrs | bins) and emit sweep.tsv.
    Sweep(SweepArgs),
    /// Materialize a synthetic stream to a CSV + schema file pair.
    Genstream(GenstreamArgs),
}

/// Where the records come from: a built-in preset, a custom synthetic shape,
/// or a CSV file with a sidecar schema.
#[derive(Args, Debug, Clone)]
pub struct StreamArgs {
    /// Built-in synthetic stream shape (d1..d5).
    #[arg(long, conflicts_with_all = ["input", "schema"])]
    pub preset: Option<String>,

    /// CSV input path; requires --schema.
    #[arg(long, requires = "schema")]
    pub input: Option<PathBuf>,

    /// Sidecar schema file for --input.
    #[arg(long)]
    pub schema: Option<PathBuf>,

    /// Records to draw from a synthetic stream (presets carry their own
    /// default; custom shapes default to 10000).
    #[arg(long)]
    pub records: Option<u64>,

    /// Numeric attribute count for a custom synthetic shape.
    #[arg(long, default_value_t = 5)]
    pub attrs: usize,

    /// Nominal attribute count for a custom synthetic shape.
    #[arg(long, default_value_t = 0)]
    pub nominal_attrs: usize,

    /// Domain size of each nominal attribute.
    #[arg(long, default_value_t = 4)]
    pub domain: usize,

    /// Class count for a custom synthetic shape.
    #[arg(long, default_value_t = 2)]
    pub classes: usize,

    /// Concept tree depth; defaults to min(total attributes, 10).
    #[arg(long)]
    pub depth: Option<usize>,

    /// Label noise fraction in [0, 1).
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,
}

/// Round structure and split-decision parameters.
#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Records per round.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,

    /// Parallel mappers per round.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub mappers: u64,

    /// Histogram bin budget for the global statistics.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub bins: u64,

    /// Split confidence parameter.
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,

    /// Tie threshold: split once the confidence bound drops below it.
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,

    /// Minimum instances at a leaf before split evaluation.
    #[arg(long, default_value_t = 200)]
    pub nmin: u64,

    /// Uniform-mass intervals when proposing numeric thresholds.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub candidates: u64,

    /// Seed for synthetic streams.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Stop after this many rounds.
    #[arg(long)]
    pub max_rounds: Option<u64>,
}

impl EngineArgs {
    pub fn to_config(&self) -> streamcart::EngineConfig {
        streamcart::EngineConfig {
            mappers: self.mappers as usize,
            batch: self.batch as usize,
            bins: self.bins as usize,
            split: streamcart::SplitConfig {
                delta: self.delta,
                tau: self.tau,
                min_instances: self.nmin,
                candidates: self.candidates as usize,
                nominal_cap: 12,
            },
            seed: self.seed,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub stream: StreamArgs,

    #[command(flatten)]
    pub engine: EngineArgs,

    /// Output directory for model.tree, rounds.tsv and round-<i>.stats.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Also report test-then-train accuracy measured during training.
    #[arg(long)]
    pub prequential: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Saved model file (canonical tree text).
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub stream: StreamArgs,

    /// Records to evaluate from a synthetic stream.
    #[arg(long, default_value_t = 10_000)]
    pub eval_records: u64,

    /// Seed of the synthetic evaluation stream; defaults to a fixed offset
    /// of --seed so held-out data never repeats the training draw.
    #[arg(long)]
    pub eval_seed: Option<u64>,

    /// Concept seed for synthetic streams (must match training to evaluate
    /// against the same concept).
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Swept parameter: batch | attrs | bins.
    pub axis: String,

    /// Comma-separated sweep values, e.g. 20,200,800.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<u64>,

    #[command(flatten)]
    pub stream: StreamArgs,

    #[command(flatten)]
    pub engine: EngineArgs,

    /// Output directory for sweep.tsv.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Held-out records evaluated per sweep point.
    #[arg(long, default_value_t = 10_000)]
    pub eval_records: u64,

    /// Seed of the held-out stream; defaults to a fixed offset of --seed.
    #[arg(long)]
    pub eval_seed: Option<u64>,

    /// Measure test-then-train accuracy instead of held-out accuracy.
    #[arg(long)]
    pub prequential: bool,
}

#[derive(Args, Debug)]
pub struct GenstreamArgs {
    #[command(flatten)]
    pub stream: StreamArgs,

    /// Seed for the generated stream.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Output directory for stream.csv and stream.schema.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
