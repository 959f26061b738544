use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "chainsentry",
    version,
    about = "Collaborative deep-belief-network attack detection for blockchain nodes",
    after_help = "Log verbosity follows RUST_LOG (default: info)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic per-node traffic data as node{l}.csv files.
    Gen(GenArgs),
    /// Train under one scheme and write models, history and a report.
    Train(TrainArgs),
    /// Evaluate a model file on a labelled CSV.
    Eval(EvalArgs),
    /// Classify a record stream one record at a time.
    Detect(DetectArgs),
    /// Project a CSV onto its principal components.
    Pca(PcaArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Every node gets --per-class samples.
    Uniform,
    /// Three nodes; node 1 lacks FoT and node 3 lacks BP.
    Heterogeneous,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u16).range(1..))]
    pub nodes: u16,
    /// Samples per class on every node, in class order.
    #[arg(long, value_delimiter = ',', default_value = "3000,300,300,300")]
    pub per_class: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Preset::Uniform)]
    pub preset: Preset,
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    /// 0 keeps Normal, BP and FoT apart; 1 puts them on one centre.
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Per-node displacement of every class centre.
    #[arg(long)]
    pub node_shift: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Pclm,
    Clm,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Socket,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding node1.csv, node2.csv, ...
    #[arg(long, default_value = "data")]
    pub data: PathBuf,
    /// Use only the first N node files.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub nodes: Option<u16>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Pclm)]
    pub scheme: SchemeArg,
    /// Training iterations (one mini-batch per node each).
    #[arg(long, default_value_t = 700)]
    pub epochs: usize,
    /// Step size of the gradient-ascent update.
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Gibbs steps per contrastive-divergence estimate.
    #[arg(long, default_value_t = 1)]
    pub cd_k: usize,
    /// Mini-batch size per node.
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Hidden layer sizes: the Gaussian RBM first, then each binary RBM.
    #[arg(long, value_delimiter = ',', default_value = "16,8")]
    pub arch: Vec<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,
    /// Remote nodes as id@host:port. Runs this process as a single node.
    #[arg(long, value_delimiter = ',')]
    pub peers: Vec<String>,
    /// This process's node id when --peers is given.
    #[arg(long)]
    pub node_id: Option<u16>,
    /// Listen address when --peers is given.
    #[arg(long)]
    pub listen: Option<String>,
    /// Use this scaler instead of fitting one.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Held-out share of every node's data; 0 trains on everything.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Evaluate every N iterations; 0 disables the accuracy history.
    #[arg(long, default_value_t = 10)]
    pub eval_every: u32,
    /// Stop once accuracy moves less than 0.1 points over 50 iterations.
    #[arg(long)]
    pub plateau: bool,
    /// Per-round wait for peers, in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labelled CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Value of the report's `scheme` field.
    #[arg(long, default_value = "eval")]
    pub scheme: String,
    /// Value of the report's `node` field.
    #[arg(long)]
    pub node: Option<u32>,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Manifest path; defaults to <out>.manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV to read; standard input when absent or "-".
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Reporting window in seconds. Classification is always per record.
    #[arg(long, default_value_t = 2.0)]
    pub window: f64,
    /// Alert lines destination; standard output when absent.
    #[arg(long)]
    pub alerts: Option<PathBuf>,
    #[arg(long, default_value = "detect_summary.json")]
    pub summary: PathBuf,
    /// Value of the metrics report's `scheme` field.
    #[arg(long, default_value = "detect")]
    pub scheme: String,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Manifest path; defaults to <summary>.manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    /// Standardize features before projecting.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value = "pca.csv")]
    pub out: PathBuf,
    /// Manifest path; defaults to <out>.manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
