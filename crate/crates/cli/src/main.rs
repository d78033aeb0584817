//! `ratelessmv`: Monte-Carlo latency simulation, closed-form analysis, LT
//! overhead measurement, and a TCP master/worker runtime for coded
//! distributed matrix-vector multiplication.
//!
//! Exit codes: 0 success, 2 usage error, 3 runtime or job failure.

mod analyze;
mod args;
mod error;
mod job;
mod output;
mod overhead;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ratelessmv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo latency and computation trials for one strategy.
    Simulate(simulate::SimulateArgs),
    /// Closed-form latency means, LT bounds and computation tail bounds.
    Analyze(analyze::AnalyzeArgs),
    /// LT decoding overhead and decode trajectories.
    Overhead(overhead::OverheadArgs),
    /// Encode a matrix and stage per-worker files plus a manifest.
    Encode(job::EncodeArgs),
    /// Serve one job: collect worker results and decode b = A x.
    Master(job::MasterArgs),
    /// Compute staged rows against the master's vector.
    Worker(job::WorkerArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with code 2 on malformed arguments
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Overhead(a) => overhead::run(a),
        Command::Encode(a) => job::encode(a),
        Command::Master(a) => job::master(a),
        Command::Worker(a) => job::worker(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ratelessmv: {e}");
            e.exit_code()
        }
    }
}
