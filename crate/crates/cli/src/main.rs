mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use attraos_core::evolution::EvolutionStrategy;
use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser)]
#[command(name = "attraos", version, about = "Chaotic time-series simulation, embedding, diagnostics and forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a chaotic system and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Select (m, τ) and write the delay-embedded trajectory of one channel.
    Embed(EmbedArgs),
    /// Estimate the maximal Lyapunov exponent of every channel.
    Lyapunov(LyapunovArgs),
    /// Fit a forecaster and save it as JSON.
    Fit(FitArgs),
    /// Forecast from the end of a series with a saved model.
    Predict(PredictArgs),
    /// Score forecasts against truth, or backtest a saved model.
    Eval(EvalArgs),
    /// Time the sequential and tree scans and compare their outputs.
    BenchScan(BenchScanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Lorenz63,
    Lorenz96,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    system: System,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Lorenz96 state dimension.
    #[arg(long, default_value_t = 40)]
    dim: usize,
    /// Lorenz96 forcing.
    #[arg(long = "f", default_value_t = 8.0)]
    forcing: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 28.0)]
    rho: f64,
    #[arg(long, default_value_t = 8.0 / 3.0)]
    beta: f64,
    /// Initial state; defaults to (1, 1, 1) for Lorenz63 and F + 0.01 in
    /// the first coordinate for Lorenz96.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Leading states dropped before output.
    #[arg(long, default_value_t = 0)]
    transient: usize,
    /// Observe through a random linear map with this many outputs.
    #[arg(long)]
    obs_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    channel: usize,
    #[arg(long, requires = "tau")]
    m: Option<usize>,
    #[arg(long, requires = "m")]
    tau: Option<usize>,
    #[arg(long, default_value_t = 64)]
    max_tau: usize,
    #[arg(long, default_value_t = 10)]
    max_m: usize,
    #[arg(long, default_value_t = 0.01)]
    fnn_threshold: f64,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with a `.json` extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct LyapunovArgs {
    #[arg(long)]
    input: PathBuf,
    /// Selected per channel when omitted.
    #[arg(long, requires = "tau")]
    m: Option<usize>,
    #[arg(long, requires = "m")]
    tau: Option<usize>,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[arg(long)]
    theiler: Option<usize>,
    #[arg(long, requires = "fit_end")]
    fit_start: Option<usize>,
    #[arg(long, requires = "fit_start")]
    fit_end: Option<usize>,
    /// Sampling interval; read from the `t` column when omitted.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Only the first rows of the input are used for training.
    #[arg(long)]
    train_rows: Option<usize>,
    #[command(flatten)]
    overrides: ForecasterFlags,
}

#[derive(Args, Default)]
pub struct ForecasterFlags {
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub patch_len: Option<usize>,
    #[arg(long)]
    pub poly_order: Option<usize>,
    /// One of legt_full, legs_diag, diag_neg1.
    #[arg(long)]
    pub ssm_variant: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub m_modes: Option<usize>,
    #[arg(long)]
    pub ridge_lambda: Option<f64>,
    #[arg(long)]
    pub readout_lambda: Option<f64>,
    #[arg(long)]
    pub strategy: Option<EvolutionStrategy>,
    #[arg(long)]
    pub teacher_alpha: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub n_clusters: Option<usize>,
    #[arg(long)]
    pub hopfield_beta: Option<f64>,
    /// Fixed embedding dimension; needs `--tau`.
    #[arg(long, requires = "tau")]
    pub m: Option<usize>,
    #[arg(long, requires = "m")]
    pub tau: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Total forecast length; longer than the model horizon rolls out
    /// autoregressively.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, requires = "truth", conflicts_with_all = ["model", "input"])]
    pred: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    truth: Option<PathBuf>,
    #[arg(long, requires = "input")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct BenchScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ATTRAOS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("ATTRAOS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Embed(a) => commands::embed(a),
        Command::Lyapunov(a) => commands::lyapunov(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::BenchScan(a) => commands::bench_scan(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
