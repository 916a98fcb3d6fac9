use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

use output::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "nilwalk",
    version,
    about = "Random walks on nilpotent Lie groups: exact algebra checks and Monte Carlo limit experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Overrides the seed of the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for CSV and summary JSON
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Maximum number of words in symbolic expansions
    #[arg(long, global = true, default_value_t = nilwalk::free_symbolic::DEFAULT_TERM_BUDGET)]
    pub budget: u128,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Algebra validation
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Weight filtrations
    #[command(subcommand)]
    Filtration(FiltrationCmd),
    /// Path-swap identities
    #[command(subcommand)]
    Pathswap(PathswapCmd),
    /// Random walk experiments
    Walk {
        #[arg(value_enum)]
        kind: commands::WalkKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Characteristic function scans
    #[command(subcommand)]
    Fourier(FourierCmd),
    /// Limit law sampling and densities
    #[command(subcommand)]
    Limit(LimitCmd),
    /// Nilmanifold experiments
    #[command(subcommand)]
    Nilmanifold(NilmanifoldCmd),
}

#[derive(Args, Debug)]
pub struct AlgebraSource {
    /// Builtin algebra: heisenberg3, abelian(d), filiform4, free-nilpotent(g,s)
    #[arg(long, conflicts_with = "file")]
    pub builtin: Option<String>,
    /// JSON algebra description
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum AlgebraCmd {
    Check(AlgebraSource),
}

#[derive(Subcommand, Debug)]
enum FiltrationCmd {
    Compute {
        #[command(flatten)]
        source: AlgebraSource,
        /// Drift as comma-separated rationals, e.g. 1,0,0 or 1/2,0,0
        #[arg(long)]
        drift: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum PathswapCmd {
    Verify {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nprime: usize,
        #[arg(long)]
        step: usize,
        /// Also write the Dynkin polynomial as TSV
        #[arg(long)]
        emit_poly: bool,
    },
}

#[derive(Subcommand, Debug)]
enum FourierCmd {
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum LimitCmd {
    /// Density of the limit law at a point, from diffusion samples
    Density {
        #[arg(long)]
        config: PathBuf,
    },
    /// Density at the origin of the Heisenberg limit law from planar Brownian motion and its area
    HeisenbergOrigin {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 2048)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum NilmanifoldCmd {
    Equid {
        #[arg(long)]
        config: PathBuf,
        /// Walk lengths; defaults to the grid of the configuration
        #[arg(long = "N", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        cells: usize,
    },
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Algebra(AlgebraCmd::Check(src)) => commands::algebra_check(g, &src),
        Command::Filtration(FiltrationCmd::Compute { source, drift }) => {
            commands::filtration_compute(g, &source, drift.as_deref())
        }
        Command::Pathswap(PathswapCmd::Verify {
            a,
            k,
            nprime,
            step,
            emit_poly,
        }) => commands::pathswap_verify(g, a, k, nprime, step, emit_poly),
        Command::Walk { kind, config } => commands::walk(g, kind, &config),
        Command::Fourier(FourierCmd::Scan { config }) => commands::fourier_scan(g, &config),
        Command::Limit(LimitCmd::Density { config }) => commands::limit_density(g, &config),
        Command::Limit(LimitCmd::HeisenbergOrigin { samples, steps }) => {
            commands::heisenberg_origin(g, samples, steps)
        }
        Command::Nilmanifold(NilmanifoldCmd::Equid { config, n, cells }) => {
            commands::nilmanifold_equid(g, &config, &n, cells)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
