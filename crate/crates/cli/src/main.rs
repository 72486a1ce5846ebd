use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sit2stand_cli::{analyze, compare, simulate, AnalyzeArgs, CompareArgs, SimulateArgs, CONFIG_ENV};

/// Sit-to-stand simulation and ground-reaction-force analysis.
///
/// Exit status: 0 on success, 2 for invalid input, 1 for run failures.
#[derive(Parser)]
#[command(name = "sit2stand", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an episode and its counterpart with the cane toggled
    Simulate {
        /// Scenario file (`key = value` lines)
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Analysis settings file
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
    },
    /// Extract events and parameters from plate recordings
    Analyze {
        /// Plate CSV (`t,fz[,seat_fz][,cane_fz][,cop_x]`), one per trial
        #[arg(long, required = true, num_args = 1..)]
        grf: Vec<PathBuf>,
        /// Skeleton recording to compare model and measured ankle moments
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Analysis settings file
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
    },
    /// Tabulate parameter differences between two runs
    Compare {
        /// Baseline run directory or parameter table
        run_a: PathBuf,
        /// Run directory or parameter table compared against the baseline
        run_b: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Analysis settings file
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate { scenario, out, config } => simulate(&SimulateArgs { scenario, out, config }),
        Command::Analyze {
            grf,
            skeleton,
            out,
            config,
        } => analyze(&AnalyzeArgs {
            grf,
            skeleton,
            out,
            config,
        }),
        Command::Compare {
            run_a,
            run_b,
            out,
            config,
        } => compare(&CompareArgs {
            run_a,
            run_b,
            out,
            config,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
