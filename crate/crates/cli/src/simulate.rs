use std::path::PathBuf;

use clap::Args;
use ratelessmv::analysis::{lt_latency_bounds_f, mds_latency_mean, rep_latency_mean};
use ratelessmv::delaysim::{LtThreshold, MonteCarlo, MonteCarloReport};
use ratelessmv::par::Execution;
use ratelessmv::strategies::{Strategy, StrategySpec};
use serde::Serialize;

use crate::args::{resolve_seed, DelayArgs, StrategyArgs};
use crate::error::{CliError, CliResult};
use crate::output::{config_header, csv_file, ensure_dir, opt};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub delay: DelayArgs,
    /// Source rows.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use a fixed LT threshold m(1+epsilon) instead of sampling real decodes.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Points in each tail grid.
    #[arg(long, default_value_t = 100)]
    pub grid_points: usize,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Resolved {
    spec: StrategySpec,
    m: usize,
    mu: f64,
    tau: f64,
    trials: usize,
    seed: u64,
    lt_threshold: Option<LtThreshold>,
    grid_points: usize,
}

pub fn run(args: &SimulateArgs) -> CliResult {
    let strategy = args.strategy.resolve()?;
    let params = args.delay.params()?;
    let spec = StrategySpec::new(strategy, params.p);
    spec.validate(args.m)?;
    if args.grid_points < 2 {
        return Err(CliError::usage("--grid-points must be at least 2"));
    }
    let threshold = match (strategy, args.epsilon) {
        (Strategy::Lt { .. }, Some(epsilon)) => {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(CliError::usage(format!(
                    "--epsilon {epsilon} must be non-negative"
                )));
            }
            Some(LtThreshold::Fixed { epsilon })
        }
        (Strategy::Lt { c, delta, .. }, None) => Some(LtThreshold::Coupled { c, delta }),
        (_, Some(_)) => return Err(CliError::usage("--epsilon applies only to --strategy lt")),
        (_, None) => None,
    };
    let seed = resolve_seed(args.seed);
    let resolved = Resolved {
        spec,
        m: args.m,
        mu: params.mu,
        tau: params.tau,
        trials: args.trials,
        seed,
        lt_threshold: threshold,
        grid_points: args.grid_points,
    };
    let header = config_header("simulate", &resolved)?;

    let mut mc =
        MonteCarlo::new(args.m, params, args.trials, seed).with_execution(if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        });
    if let Some(t) = threshold {
        mc = mc.with_threshold(t);
    }
    let report = mc.run(&spec)?;

    ensure_dir(&args.out)?;
    write_trials(&report, &header, &args.out)?;
    write_summary(&report, &header, &args.out)?;
    write_tails(&report, &header, &args.out, args.grid_points)?;
    log::info!(
        "{} trials, mean latency {:.4}, mean computations {:.1}",
        report.summary.trials,
        report.summary.latency_mean,
        report.summary.computations_mean
    );
    Ok(())
}

fn write_trials(report: &MonteCarloReport, header: &str, dir: &std::path::Path) -> CliResult {
    let mut w = csv_file(&dir.join("trials.csv"), header)?;
    let mut cols: Vec<String> = [
        "trial",
        "latency",
        "computations",
        "m_d",
        "cap_bound",
        "decode_retries",
    ]
    .map(String::from)
    .into();
    cols.extend((0..report.params.p).map(|i| format!("c_{i}")));
    w.write_record(&cols)?;
    for (t, o) in report.outcomes.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            o.latency.to_string(),
            o.total.to_string(),
            opt(o.m_d),
            o.cap_bound.to_string(),
            o.decode_retries.to_string(),
        ];
        row.extend(o.per_worker.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(report: &MonteCarloReport, header: &str, dir: &std::path::Path) -> CliResult {
    let s = &report.summary;
    let mut rows: Vec<(String, String)> = vec![
        ("trials".into(), s.trials.to_string()),
        ("latency_mean".into(), s.latency_mean.to_string()),
        ("latency_std".into(), s.latency_std.to_string()),
        ("latency_sem".into(), s.latency_sem().to_string()),
        ("computations_mean".into(), s.computations_mean.to_string()),
        ("computations_std".into(), s.computations_std.to_string()),
    ];
    rows.extend(
        s.latency_quantiles
            .iter()
            .map(|(q, v)| (format!("latency_q{q}"), v.to_string())),
    );
    rows.extend(
        s.computation_quantiles
            .iter()
            .map(|(q, v)| (format!("computations_q{q}"), v.to_string())),
    );
    rows.push(("m_d_mean".into(), opt(s.m_d_mean)));
    rows.push(("cap_binding".into(), s.cap_binding.to_string()));
    rows.push(("decode_retries".into(), s.decode_retries.to_string()));

    let (m, params) = (report.m, &report.params);
    match report.spec.strategy {
        Strategy::Mds { k } => rows.push((
            "closed_form_mean".into(),
            mds_latency_mean(m, params, k)?.to_string(),
        )),
        Strategy::Replication { r } => rows.push((
            "closed_form_mean".into(),
            rep_latency_mean(m, params, r)?.to_string(),
        )),
        Strategy::Lt { .. } => {
            if let Some(m_d) = s.m_d_mean {
                let (lo, hi) = lt_latency_bounds_f(m_d, params);
                rows.push(("lt_lower_bound".into(), lo.to_string()));
                rows.push(("lt_upper_bound".into(), hi.to_string()));
            }
        }
    }

    let mut w = csv_file(&dir.join("summary.csv"), header)?;
    w.write_record(["statistic", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn write_tails(
    report: &MonteCarloReport,
    header: &str,
    dir: &std::path::Path,
    points: usize,
) -> CliResult {
    let range = |xs: &mut dyn Iterator<Item = f64>| {
        xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
    };
    let (tlo, thi) = range(&mut report.outcomes.iter().map(|o| o.latency));
    let (clo, chi) = range(&mut report.outcomes.iter().map(|o| o.total as f64));

    let mut w = csv_file(&dir.join("tails.csv"), header)?;
    w.write_record(["quantity", "x", "tail"])?;
    for (t, pr) in report.latency_tail_grid(&linspace(tlo, thi, points)) {
        w.write_record(["latency".to_string(), t.to_string(), pr.to_string()])?;
    }
    for (c, pr) in report.computation_tail_grid(&linspace(clo, chi, points)) {
        w.write_record(["computations".to_string(), c.to_string(), pr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
