//! `escape-rate`: compute and certify values of escape rate games.

mod commands;
mod instance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] escape_rate::Error),
    /// A report was produced, but the computation stopped early or a check failed.
    #[error("{message}")]
    WithReport { message: String, report: String, code: u8 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use escape_rate::Error as E;
        match self {
            CliError::Schema(_) => 2,
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::WithReport { code, .. } => *code,
            CliError::Core(e) => match e {
                E::NodeBudgetExceeded { .. } => 3,
                E::InvariantViolation(_) => 4,
                E::DimensionMismatch { .. }
                | E::NonPositiveCoordinate { .. }
                | E::InvalidPoint(_)
                | E::InvalidFamily(_)
                | E::ActionOutOfRange { .. } => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "escape-rate",
    version,
    about = "Values, certificates and strategies for escape rate games"
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Worker threads (ESCAPE_RATE_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid resolution m.
    #[arg(long = "grid", default_value_t = 32)]
    pub m: usize,
    /// Interior floor δ of the simplex.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Maximal number of value iteration sweeps.
    #[arg(long, default_value_t = escape_rate::simplex_iter::DEFAULT_ITERS)]
    pub iters: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite-horizon values s_k and their running minimum of s_k/k.
    Horizon {
        instance: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
    },
    /// Relative value iteration of the normalized operator on a simplex grid.
    Iterate {
        instance: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Certified bracket on the value, or re-verification of stored certificates.
    Certify {
        instance: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Horizon of the Fekete upper bound folded into the bracket.
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        /// Random points for the sampled cross-check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Recompute lambda for the certificates stored in this file.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Play two strategies against each other.
    Simulate {
        instance: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Min strategy: greedy, random, const:I, qcyclic:Q, increasing, phi, vmin.
        #[arg(long, default_value = "greedy")]
        min: String,
        /// Max strategy: greedy, random, const:I, bstar, eigen, vmax.
        #[arg(long, default_value = "greedy")]
        max: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Exact solution of a vector addition game.
    Vecadd { instance: PathBuf },
    /// Joint spectral radius bracket of the Max matrices.
    Jsr {
        instance: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Joint spectral subradius bracket of the Max matrices.
    Jssr {
        instance: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Growth diagnostic of s_k − k·rho for a game where Min has one action.
    Nondefect {
        instance: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long = "K", default_value_t = 10)]
        k: usize,
        /// Also tabulate the candidate extremal function on a grid of this resolution.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var("ESCAPE_RATE_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("ESCAPE_RATE_THREADS: not a thread count: {v:?}")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = from_env.or(flag) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads(cli.threads)?;
    let out = cli.out;
    match cli.command {
        Command::Horizon { instance, k } => commands::horizon(&instance::load(&instance)?, k, out),
        Command::Iterate { instance, grid } => commands::iterate(&instance::load(&instance)?, &grid, out),
        Command::Certify {
            instance,
            grid,
            horizon,
            samples,
            seed,
            check,
        } => {
            let inst = instance::load(&instance)?;
            match check {
                Some(file) => commands::certify_check(&inst, &file, out),
                None => commands::certify(&inst, &grid, horizon, samples, seed, out),
            }
        }
        Command::Simulate {
            instance,
            steps,
            min,
            max,
            seed,
            grid,
        } => commands::simulate(&instance::load(&instance)?, steps, &min, &max, seed, &grid, out),
        Command::Vecadd { instance } => commands::vecadd(&instance::load(&instance)?, out),
        Command::Jsr { instance, depth } => commands::jsr(&instance::load(&instance)?, depth, false, out),
        Command::Jssr { instance, depth } => commands::jsr(&instance::load(&instance)?, depth, true, out),
        Command::Nondefect {
            instance,
            rho,
            k,
            grid,
            delta,
        } => commands::nondefect(&instance::load(&instance)?, rho, k, grid, delta, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::WithReport { report, .. } = &e {
                print!("{report}");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
