use std::path::PathBuf;

use clap::Args;
use ratelessmv::ltcode::{estimate_overhead_with, DEFAULT_C, DEFAULT_DELTA};
use ratelessmv::par::Execution;
use serde::Serialize;

use crate::args::resolve_seed;
use crate::error::{CliError, CliResult};
use crate::output::{config_header, csv_file, csv_stdout, ensure_dir, opt};

#[derive(Debug, Args)]
pub struct OverheadArgs {
    #[arg(long)]
    pub m: usize,
    /// One or more c values; each is paired with the matching --delta.
    #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_C])]
    pub c: Vec<f64>,
    /// Either one value for every c, or one per c.
    #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_DELTA])]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Resolved {
    m: usize,
    pairs: Vec<(f64, f64)>,
    alpha: f64,
    trials: usize,
    seed: u64,
}

pub fn run(args: &OverheadArgs) -> CliResult {
    let pairs: Vec<(f64, f64)> = match args.delta.len() {
        1 => args.c.iter().map(|&c| (c, args.delta[0])).collect(),
        n if n == args.c.len() => args
            .c
            .iter()
            .copied()
            .zip(args.delta.iter().copied())
            .collect(),
        n => {
            return Err(CliError::usage(format!(
                "{n} --delta values for {} --c values; give one or one per c",
                args.c.len()
            )))
        }
    };
    let seed = resolve_seed(args.seed);
    let header = config_header(
        "overhead",
        &Resolved {
            m: args.m,
            pairs: pairs.clone(),
            alpha: args.alpha,
            trials: args.trials,
            seed,
        },
    )?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    // validate every pair before writing anything
    let reports = pairs
        .iter()
        .map(|&(c, delta)| {
            estimate_overhead_with(args.m, c, delta, args.alpha, args.trials, seed, execution)
        })
        .collect::<Result<Vec<_>, _>>()?;

    ensure_dir(&args.out)?;
    let mut aggregate = csv_file(&args.out.join("overhead.csv"), &header)?;
    aggregate.write_record(["set", "c", "delta", "trial", "m_prime", "epsilon"])?;
    let mut summary = csv_stdout(&header)?;
    summary.write_record([
        "set",
        "c",
        "delta",
        "trials",
        "failures",
        "mean_m_prime",
        "max_m_prime",
        "epsilon",
    ])?;

    for (set, (&(c, delta), report)) in pairs.iter().zip(&reports).enumerate() {
        for (t, trial) in report.trials.iter().enumerate() {
            let path = args.out.join(format!("trajectory_{set}_{t}.csv"));
            let mut w = csv_file(&path, &header)?;
            w.write_record(["received", "decoded"])?;
            for (i, decoded) in trial.trajectory.iter().enumerate() {
                w.write_record([(i + 1).to_string(), decoded.to_string()])?;
            }
            w.flush()?;
            let eps = trial.used.map(|u| u as f64 / args.m as f64 - 1.0);
            aggregate.write_record([
                set.to_string(),
                c.to_string(),
                delta.to_string(),
                t.to_string(),
                opt(trial.used),
                opt(eps),
            ])?;
        }
        let complete = report.failures() < report.trials.len();
        summary.write_record([
            set.to_string(),
            c.to_string(),
            delta.to_string(),
            report.trials.len().to_string(),
            report.failures().to_string(),
            opt(complete.then(|| report.mean_used())),
            opt(report.max_used()),
            opt(complete.then(|| report.epsilon())),
        ])?;
    }
    aggregate.flush()?;
    summary.flush()?;
    Ok(())
}
