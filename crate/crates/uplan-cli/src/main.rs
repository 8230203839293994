//! Command-line front end: scenario validation, roadmap building, the two
//! planners, policy execution, MDP estimation and robust solving, the
//! milestone-bound calculator, and SVG scene rendering.

mod commands;
mod errors;
mod io;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "uplan",
    about = "Roadmap planning under obstacle uncertainty and robust discounted MDPs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundModeArg {
    /// p_hat - sigma_hat * z
    Verbatim,
    /// p_hat - sigma_hat / sqrt(T) * z
    Stderr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolveModeArg {
    Interval,
    Ellipsoid,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report its shape.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Build a roadmap over free-space milestones.
    Build(BuildArgs),
    /// Plan on a roadmap: max-probability or cost under a probability
    /// constraint.
    Plan(PlanArgs),
    /// Execute a planned path with fresh simulation noise.
    Execute(ExecuteArgs),
    /// Discounted-MDP estimation and robust solving.
    Mdp {
        #[command(subcommand)]
        command: MdpCommand,
    },
    /// Milestone-count bound for expansive free spaces.
    Bound {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output roadmap path.
    #[arg(long)]
    out: PathBuf,
    /// Milestone parameter: n - 1 interior milestones are sampled.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Nearest neighbors tried per milestone.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Controller trials per directed edge.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Reliability of the per-edge lower bound.
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BoundModeArg::Verbatim)]
    bound_mode: BoundModeArg,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    roadmap: PathBuf,
    /// Success-probability constraint; omit for the max-probability path.
    #[arg(long)]
    p_min: Option<f64>,
    /// Comma-separated p_min values; emits one record per value.
    #[arg(long)]
    sweep: Option<String>,
    /// Probability-discretization levels of the constrained solver.
    #[arg(long, default_value_t = 1024)]
    levels: usize,
    /// Neighbors tried when splicing the query (default: build value).
    #[arg(long)]
    k: Option<usize>,
    /// Trials per query connection (default: build value).
    #[arg(long)]
    trials: Option<usize>,
    /// Reliability for query-edge bounds (default: build value).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plan on the empirical frequencies instead of the lower bounds.
    #[arg(long, default_value_t = false)]
    use_p_hat: bool,
    /// Write an SVG of the scene and path.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Write the query-augmented roadmap (input to `execute`).
    #[arg(long)]
    save_roadmap: Option<PathBuf>,
}

#[derive(Args)]
struct ExecuteArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Query-augmented roadmap (from `plan --save-roadmap`).
    #[arg(long)]
    roadmap: PathBuf,
    /// Plan record (stdout of `plan`, saved to a file).
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum MdpCommand {
    /// Sample milestones and estimate discounted transitions per action.
    Estimate(MdpEstimateArgs),
    /// Solve a stored estimate robustly.
    Solve(MdpSolveArgs),
}

#[derive(Args)]
struct MdpEstimateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of milestones (regions).
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Discount factor.
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    trials_per_state: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MdpSolveArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveModeArg::Interval)]
    mode: SolveModeArg,
    /// Confidence level of the uncertainty sets.
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Covariance regularization for the ellipsoid metric.
    #[arg(long, default_value_t = 1e-6)]
    reg_eps: f64,
    /// Print per-iteration sup-norm residuals to stderr.
    #[arg(long, default_value_t = false)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { scenario } => commands::validate(&scenario),
        Command::Build(args) => commands::build(&args),
        Command::Plan(args) => commands::plan(&args),
        Command::Execute(args) => commands::execute(&args),
        Command::Mdp { command } => match command {
            MdpCommand::Estimate(args) => commands::mdp_estimate(&args),
            MdpCommand::Solve(args) => commands::mdp_solve(&args),
        },
        Command::Bound {
            epsilon,
            alpha,
            beta,
            gamma,
        } => commands::bound(epsilon, alpha, beta, gamma),
    };
    match result {
        Ok(doc) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("serializable output")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            println!(
                "{}",
                serde_json::to_string_pretty(&err.payload()).expect("serializable payload")
            );
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
