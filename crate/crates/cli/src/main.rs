use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod bench;
mod commands;
mod manifest;
mod parse;

/// SIC-POVM tomography: simulate shots, stream estimates, reconstruct
/// states, and compute measurement budgets.
#[derive(Parser, Debug)]
#[command(name = "sicshadow", version)]
struct Cli {
    /// Worker thread cap for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample measurement records from a state.
    Simulate(SimulateArgs),
    /// Stream estimates from a SIC shot file.
    Estimate(EstimateArgs),
    /// Reconstruct a density matrix from shots or frequencies.
    Reconstruct(ReconstructArgs),
    /// Shots needed for a target accuracy.
    Budget(BudgetArgs),
    /// Time reconstruction methods over a range of qubit counts.
    Bench(BenchArgs),
    /// Play the 16-cluster identification game.
    Game(GameArgs),
    /// Convergence and batching experiments on simulated data.
    Experiment(ExperimentArgs),
    /// Run the built-in oracle checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmArg {
    Sic,
    Pauli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameArg {
    Standard,
    Rotated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Library state name or state JSON file.
    #[arg(long)]
    pub state: String,
    #[arg(long, value_enum, default_value = "sic")]
    pub povm: PovmArg,
    #[arg(long, value_enum, default_value = "standard")]
    pub frame: FrameArg,
    #[arg(long, required_unless_present = "exact_frequencies")]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Batch-size hint recorded in the header.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Weight of white noise mixed into the state.
    #[arg(long, default_value_t = 0.0)]
    pub depolarize: f64,
    /// Write the exact outcome frequencies (JSON) instead of sampled shots.
    #[arg(long)]
    pub exact_frequencies: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `kind:arg` items separated by `;`, e.g. `fidelity:ame5;renyi:all:2;purity:full`.
    #[arg(long)]
    pub quantities: Vec<String>,
    /// Target state for a fidelity estimate.
    #[arg(long)]
    pub fidelity: Vec<String>,
    /// `full` or a qubit list such as `0,2`.
    #[arg(long)]
    pub purity: Vec<String>,
    /// `all:K` or a side list such as `0,1`.
    #[arg(long)]
    pub renyi: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Batch size for whole-system purity.
    #[arg(long)]
    pub full_batch: Option<usize>,
    /// Shots per report.
    #[arg(long, default_value_t = sicshadow::stream::online::DEFAULT_INTERVAL)]
    pub interval: u64,
    /// Stopping window, in reports.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Consume the whole file regardless of convergence.
    #[arg(long)]
    pub no_stop: bool,
    #[arg(long)]
    pub max_shots: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsArg {
    Identity,
    Multinomial,
}

#[derive(Args, Debug, Serialize)]
pub struct ReconstructArgs {
    /// Shot file or frequency JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// lininv, pls, mle or shadow-mean.
    #[arg(long)]
    pub method: String,
    #[arg(long, value_enum, default_value = "identity")]
    pub weights: WeightsArg,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetKind {
    Observable,
    Purity,
}

#[derive(Args, Debug, Serialize)]
pub struct BudgetArgs {
    #[arg(value_enum)]
    pub kind: BudgetKind,
    /// Locality: qubits per observable or subsystem.
    #[arg(short = 'k', long)]
    pub k: usize,
    /// Number of quantities estimated simultaneously.
    #[arg(short = 'l', long, default_value_t = 1)]
    pub l: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    /// `tr(O^2)`; defaults to the worst case `2^K`.
    #[arg(long)]
    pub hs_norm_sq: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    pub min_qubits: usize,
    #[arg(long, default_value_t = 6)]
    pub max_qubits: usize,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Comma list from shadow-mean, lininv, pls, mle.
    #[arg(long, default_value = "shadow-mean,lininv,pls,mle")]
    pub methods: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GameArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub gap_window: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = sicshadow::stream::game::DEFAULT_SHOT_CAP)]
    pub shot_cap: u64,
    /// Include the per-shot transcript of every trial.
    #[arg(long)]
    pub transcript: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    Convergence,
    Batching,
}

#[derive(Args, Debug, Serialize)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub mode: ExperimentMode,
    #[arg(long)]
    pub state: String,
    /// Fidelity target; defaults to the state itself when it is pure.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub depolarize: f64,
    #[arg(long, value_enum, default_value = "standard")]
    pub frame: FrameArg,
    /// Comma list of shot counts.
    #[arg(long, default_value = "1000,10000,100000")]
    pub shots: String,
    /// Comma list of batch sizes (batching mode).
    #[arg(long, default_value = "1,10,100")]
    pub batches: String,
    #[arg(long, default_value = "shadow-mean,lininv,pls,mle")]
    pub methods: String,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_EXHAUSTED: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_CAP: u8 = 4;

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<sicshadow::Error>() {
        Some(sicshadow::Error::CapExceeded { .. }) => EXIT_CAP,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Budget(a) => commands::budget(a),
        Command::Bench(a) => bench::run(a),
        Command::Game(a) => commands::game(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
