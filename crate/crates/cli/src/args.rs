//! Command-line surface.

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "logmend",
    about = "Repair event logs with missing events and attributes using heterogeneous graph message passing",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic event log from a process spec
    Generate(GenerateArgs),
    /// Damage a log by masking whole events under a strategy
    Mask(MaskArgs),
    /// Random-search training hyperparameters, write the best config
    Tune(TuneArgs),
    /// Train a model and write its artifacts
    Train(TrainArgs),
    /// Train several models and report per-strategy metrics
    Evaluate(EvaluateArgs),
    /// Fill the missing cells of a damaged log
    Repair(RepairArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SchemaArgs {
    /// Schema JSON file; inferred from the data when omitted
    #[arg(long)]
    pub schema: Option<std::path::PathBuf>,
    /// Case id column name used for inference
    #[arg(long, default_value = "case_id")]
    pub case_col: String,
    /// Activity column name used for inference
    #[arg(long, default_value = "activity")]
    pub activity_col: String,
    /// Timestamp column name used for inference
    #[arg(long, default_value = "timestamp")]
    pub timestamp_col: String,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// Hidden width of node representations
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    /// Number of message-passing layers
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Aggregation kernel: sum, mean or max. Defaults to mean, or to the
    /// tuned value when a config file is given
    #[arg(long)]
    pub aggregator: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Process spec JSON
    #[arg(long)]
    pub spec: std::path::PathBuf,
    /// Number of traces to generate
    #[arg(long)]
    pub traces: usize,
    #[arg(long, default_value_t = 123)]
    pub seed: u64,
    /// Output CSV path
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Input CSV log
    pub input: std::path::PathBuf,
    /// Output CSV log with masked events
    pub output: std::path::PathBuf,
    /// Masking strategy: odd, even, window or random
    #[arg(long)]
    pub strategy: String,
    /// Removal probability for the random strategy
    #[arg(long, default_value_t = 0.5)]
    pub random_p: f64,
    #[arg(long, default_value_t = 123)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Input CSV log
    #[arg(long)]
    pub log: std::path::PathBuf,
    /// Number of search trials
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 123)]
    pub seed: u64,
    /// Epoch cap per trial
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    /// Where to write the best config JSON
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
    /// Serialize all work; identical results either way
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub deterministic: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input CSV log
    #[arg(long)]
    pub log: std::path::PathBuf,
    /// Training config JSON (as written by tune); flags below override it
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 123)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub random_p: f64,
    /// Directory for params.bin, encoders.json and history.csv
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Input CSV log
    #[arg(long)]
    pub log: std::path::PathBuf,
    /// Training config JSON (as written by tune)
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Number of models trained and evaluated
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 123)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub random_p: f64,
    /// Where to write the report JSON
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Directory for per-run history CSVs (optional)
    #[arg(long)]
    pub history_dir: Option<std::path::PathBuf>,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
    /// Serialize all work; identical results either way
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub deterministic: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    /// Damaged CSV log
    #[arg(long)]
    pub log: std::path::PathBuf,
    /// Artifact directory written by train
    #[arg(long)]
    pub artifacts: std::path::PathBuf,
    /// Output CSV path
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, default_value = "-")]
    pub missing_token: String,
}
