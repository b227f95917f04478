use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Sparse dependence structure of multivariate extremes and anomaly scoring.
#[derive(Debug, Parser)]
#[command(name = "extremis", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on a training CSV and write it as JSON.
    Fit(FitArgs),
    /// Score every row of a CSV with a fitted model.
    Score(ScoreArgs),
    /// Draw a sample from a random asymmetric logistic model.
    Simulate(SimulateArgs),
    /// Run the support-recovery experiment on simulated data.
    Recover(RecoverArgs),
    /// Extreme-region benchmark on a preprocessed public dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
struct ModelFlags {
    /// Number of extremes, or "auto" for floor(sqrt(n)).
    #[arg(long, default_value = "auto")]
    k: String,
    /// Tolerance of the thickened rectangles, in (0, 1).
    #[arg(long = "eps", default_value_t = 0.01)]
    epsilon: f64,
    /// Mass threshold as a proportion of the average positive mass.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Sub-cone matching rule used when scoring.
    #[arg(long, default_value = "self-scaled-cone")]
    mode: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    train: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    model: std::path::PathBuf,
    #[arg(long = "in")]
    input: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    d: usize,
    /// Number of charged subsets.
    #[arg(long = "K")]
    num_subsets: usize,
    #[arg(long)]
    n: usize,
    /// Dependence parameter of every block, in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    w: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
    /// Also write the drawn model as JSON.
    #[arg(long)]
    spec_out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long = "K")]
    num_subsets: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0.1)]
    w: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelFlags,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// shuttle | forestcover | http | sf | sa
    #[arg(long)]
    recipe: String,
    /// Raw CSV file(s) with a header row; repeat to concatenate.
    #[arg(long, required = true)]
    raw: Vec<std::path::PathBuf>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// CSV `row_index,abnormality_score` indexed by preprocessed dataset row.
    #[arg(long)]
    baseline: Option<std::path::PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn configure_threads() {
    let Ok(value) = std::env::var("EXTREMIS_THREADS") else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not set worker count: {e}");
            }
        }
        _ => log::warn!("ignoring EXTREMIS_THREADS='{value}': expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();

    let result = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Score(args) => commands::score(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Recover(args) => commands::recover(args),
        Command::Eval(args) => commands::eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
