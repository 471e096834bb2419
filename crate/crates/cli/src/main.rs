mod commands;
mod config;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use anomex_core::context::Selection;
use anomex_core::explain::Method;
use anomex_core::synth::AnomalyKind;
use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// A problem with how the tool was invoked rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "anomex", version, about = "Explain anomalies in energy time series with context-aware Shapley values")]
struct Cli {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Maximum worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hourly series with injected anomalies.
    Synth(SynthArgs),
    /// Fit a forecaster and report test-split accuracy.
    Train(TrainArgs),
    /// Flag test windows whose first-hour error falls outside the IQR fences.
    Detect(DetectArgs),
    /// Attribute one detected anomaly to its input features.
    Explain(ExplainArgs),
    /// Compare attribution stability under similar and random backgrounds.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Run directory for the CSV, ground truth and manifest.
    #[arg(long)]
    out: PathBuf,
    /// Series length in hours.
    #[arg(long)]
    hours: Option<usize>,
    /// Number of injected anomalies.
    #[arg(long)]
    anomalies: Option<usize>,
    /// Anomaly size in noise standard deviations.
    #[arg(long)]
    magnitude: Option<f64>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Seed of the clean series.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the anomaly placement.
    #[arg(long)]
    anomaly_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Spike,
    LevelShift,
    Sustained,
}

impl From<KindArg> for AnomalyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Spike => AnomalyKind::Spike,
            KindArg::LevelShift => AnomalyKind::LevelShift,
            KindArg::Sustained => AnomalyKind::Sustained,
        }
    }
}

/// Flags shared by every command that reads a series.
#[derive(Args)]
struct DataArgs {
    /// Input CSV (timestamp, energy and optional weather columns).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Window length in hours.
    #[arg(long)]
    window: Option<usize>,
    /// Forecast horizon in hours.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Run directory for this command's outputs.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Ridge penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed of the MLP initialization or the forest.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Ridge,
    Mlp,
    Forest,
}

#[derive(Args)]
struct DetectArgs {
    /// Run directory for this command's outputs.
    #[arg(long)]
    out: PathBuf,
    /// Model artifact written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct ExplainArgs {
    /// Run directory for this command's outputs.
    #[arg(long)]
    out: PathBuf,
    /// Model artifact written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Test-window index of a detected anomaly.
    #[arg(long)]
    anomaly: usize,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    /// Background size.
    #[arg(long)]
    k: Option<usize>,
    /// Seed of the estimator and of random background selection.
    #[arg(long)]
    seed: Option<u64>,
    /// Coalitions, permutations or permutation pairs, by method.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Kernel,
    Sampling,
    Permutation,
    Exact,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kernel => Method::Kernel,
            MethodArg::Sampling => Method::Sampling,
            MethodArg::Permutation => Method::Permutation,
            MethodArg::Exact => Method::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Similar,
    Random,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::Similar => Selection::Similar,
            SelectionArg::Random => Selection::Random,
        }
    }
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Run directory for this command's outputs.
    #[arg(long)]
    out: PathBuf,
    /// Model artifact written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: Option<usize>,
    /// Base seed of background selection and the estimators.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    max_anomalies: Option<usize>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    let core = err.chain().find_map(|e| e.downcast_ref::<anomex_core::Error>());
    match core {
        Some(e) if e.is_numerical() => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(UsageError("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = config::RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(args) => commands::synth(&mut cfg, args),
        Command::Train(args) => commands::train(&mut cfg, args),
        Command::Detect(args) => commands::detect(&mut cfg, args),
        Command::Explain(args) => commands::explain(&mut cfg, args),
        Command::Benchmark(args) => commands::benchmark(&mut cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
