//! fountain-sim: numerical experiments on a laser-cooled caesium
//! fountain clock. Every run is a pure function of (config, seed); the
//! thread count changes nothing but wall time.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use fountain_cli::commands;
use fountain_cli::config::{self, ExperimentKind};
use fountain_cli::CliError;

#[derive(Parser)]
#[command(
    name = "fountain-sim",
    version,
    about = "Caesium fountain clock simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config, JSON.
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; reruns with the same config and seed are byte-identical.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path prefix; files are written as {out}_*.csv and {out}_*.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores. Does not affect the outputs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Ramsey fringe pattern over a detuning grid, with metrics and S/N
    Fringe(RunArgs),
    /// Fringe response to a sweep of microwave leakage amplitudes and phases
    Leakage(RunArgs),
    /// Time-resolved optical pumping of the ground sublevels
    PumpScan(RunArgs),
    /// Dark-state selection yield vs repumper polarization angle
    AngleScan(RunArgs),
    /// Closed-loop clock servo and Allan deviation
    Servo(RunArgs),
    /// Dipole strength and decay branching tables
    Strengths {
        /// Optional config; the tables take no parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recorded in the echo for uniformity; the tables are exact.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path prefix.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn build_pool(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fringe(args) => {
            build_pool(args.threads)?;
            let file = config::load(&args.config, ExperimentKind::Fringe)?;
            commands::fringe::run(&file, args.seed, &args.out)
        }
        Command::Leakage(args) => {
            build_pool(args.threads)?;
            let file = config::load(&args.config, ExperimentKind::Leakage)?;
            commands::leakage::run(&file, args.seed, &args.out)
        }
        Command::PumpScan(args) => {
            build_pool(args.threads)?;
            let file = config::load(&args.config, ExperimentKind::PumpScan)?;
            commands::pump_scan::run(&file, args.seed, &args.out)
        }
        Command::AngleScan(args) => {
            build_pool(args.threads)?;
            let file = config::load(&args.config, ExperimentKind::AngleScan)?;
            commands::angle_scan::run(&file, args.seed, &args.out)
        }
        Command::Servo(args) => {
            build_pool(args.threads)?;
            let file = config::load(&args.config, ExperimentKind::Servo)?;
            commands::servo::run(&file, args.seed, &args.out)
        }
        Command::Strengths {
            config: cfg,
            seed,
            out,
            threads,
        } => {
            build_pool(threads)?;
            if let Some(path) = cfg {
                config::load(&path, ExperimentKind::Strengths)?;
            }
            commands::strengths::run(seed, &out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
