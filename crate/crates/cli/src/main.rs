//! `dynmmd`: two-sample testing for dynamical systems from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 malformed or
//! inconsistent data, 3 statistically infeasible request (non-mixing input
//! where `a*` is needed, too few samples after thinning).

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};

use crate::error::EXIT_USAGE;

#[derive(Debug, Parser)]
#[command(name = "dynmmd", version, about = "Kernel two-sample tests for trajectories of dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate trajectories of a benchmark system
    Simulate(commands::simulate::SimulateArgs),
    /// HSIC dependence profile over time shifts and the decorrelation shift a*
    Mixing(commands::mixing::MixingArgs),
    /// Thin two trajectories and run the MMD two-sample test
    TwoSample(commands::two_sample::TwoSampleArgs),
    /// Run a scaled benchmark suite
    Bench(commands::bench::BenchArgs),
    /// Nearest-MMD classification of trajectories
    Classify(commands::classify::ClassifyArgs),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Mixing(a) => commands::mixing::run(&a),
        Command::TwoSample(a) => commands::two_sample::run(&a),
        Command::Bench(a) => commands::bench::run(&a),
        Command::Classify(a) => commands::classify::run(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
