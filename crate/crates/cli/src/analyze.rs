use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use ratelessmv::analysis::{
    lt_latency_bounds_f, mds_comp_tail_bound, mds_latency_mean, mds_latency_mean_approx, mds_theta,
    rep_comp_tail_bound, rep_latency_mean, rep_latency_mean_approx, rep_theta,
};
use ratelessmv::delaysim::DelayParams;
use ratelessmv::ltcode::{estimate_overhead, DEFAULT_C, DEFAULT_DELTA};
use ratelessmv::Error;
use serde::Serialize;

use crate::args::{resolve_seed, DelayArgs};
use crate::error::{CliError, CliResult};
use crate::output::{config_header, csv_file, csv_stdout, ensure_dir};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub delay: DelayArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// LT overhead; estimated from simulated decodes when omitted.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Decodes used to estimate epsilon.
    #[arg(long, default_value_t = 20)]
    pub overhead_trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Slack values for the computation tail bounds.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    pub c0: Vec<f64>,
    /// Also write analysis.csv and tail_bounds.csv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Resolved {
    m: usize,
    p: usize,
    mu: f64,
    tau: f64,
    k: usize,
    r: usize,
    epsilon: f64,
    epsilon_source: EpsilonSource,
    c0: Vec<f64>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EpsilonSource {
    Given,
    Estimated {
        alpha: f64,
        c: f64,
        delta: f64,
        trials: usize,
        seed: u64,
    },
}

type Row = [String; 6];

pub fn run(args: &AnalyzeArgs) -> CliResult {
    let params = args.delay.params()?;
    let (m, p) = (args.m, params.p);
    let (epsilon, source) = match args.epsilon {
        Some(e) if e >= 0.0 && e.is_finite() => (e, EpsilonSource::Given),
        Some(e) => {
            return Err(CliError::usage(format!(
                "--epsilon {e} must be non-negative"
            )))
        }
        None => {
            let seed = resolve_seed(args.seed);
            let report = estimate_overhead(
                m,
                args.c,
                args.delta,
                args.alpha,
                args.overhead_trials,
                seed,
            )?;
            if report.failures() == report.trials.len() {
                return Err(CliError::failure("no LT decode completed; pass --epsilon"));
            }
            let source = EpsilonSource::Estimated {
                alpha: args.alpha,
                c: args.c,
                delta: args.delta,
                trials: args.overhead_trials,
                seed,
            };
            (report.epsilon(), source)
        }
    };

    let table = latency_rows(m, &params, args.k, args.r, epsilon)?;
    let tails = tail_rows(m, &params, args.k, args.r, &args.c0)?;
    let header = config_header(
        "analyze",
        &Resolved {
            m,
            p,
            mu: params.mu,
            tau: params.tau,
            k: args.k,
            r: args.r,
            epsilon,
            epsilon_source: source,
            c0: args.c0.clone(),
        },
    )?;

    const LATENCY_COLS: [&str; 6] = [
        "strategy",
        "parameter",
        "latency_mean",
        "latency_lower",
        "latency_upper",
        "latency_approx",
    ];
    const TAIL_COLS: [&str; 6] = [
        "c0",
        "mds_theta",
        "mds_bound",
        "rep_theta",
        "rep_bound",
        "note",
    ];

    let mut w = csv_stdout(&header)?;
    w.write_record(LATENCY_COLS)?;
    for row in &table {
        w.write_record(row)?;
    }
    w.flush()?;
    drop(w);
    let mut stdout = std::io::stdout();
    writeln!(stdout, "# computation tail bounds")?;
    let mut w = csv::Writer::from_writer(stdout);
    w.write_record(TAIL_COLS)?;
    for row in &tails {
        w.write_record(row)?;
    }
    w.flush()?;

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        for (name, cols, rows) in [
            ("analysis.csv", LATENCY_COLS, &table),
            ("tail_bounds.csv", TAIL_COLS, &tails),
        ] {
            let mut w = csv_file(&dir.join(name), &header)?;
            w.write_record(cols)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn latency_rows(
    m: usize,
    params: &DelayParams,
    k: usize,
    r: usize,
    epsilon: f64,
) -> CliResult<Vec<Row>> {
    let s = |v: f64| v.to_string();
    let uncoded = rep_latency_mean(m, params, 1)?;
    let rep = rep_latency_mean(m, params, r)?;
    let mds = mds_latency_mean(m, params, k)?;
    let m_d = m as f64 * (1.0 + epsilon);
    let (lo, hi) = lt_latency_bounds_f(m_d, params);
    let approx_mds = mds_latency_mean_approx(m, params, k);
    Ok(vec![
        [
            "uncoded".into(),
            "r=1".into(),
            s(uncoded),
            String::new(),
            String::new(),
            s(rep_latency_mean_approx(m, params, 1)),
        ],
        [
            "replication".into(),
            format!("r={r}"),
            s(rep),
            String::new(),
            String::new(),
            s(rep_latency_mean_approx(m, params, r)),
        ],
        [
            "mds".into(),
            format!("k={k}"),
            s(mds),
            String::new(),
            String::new(),
            if approx_mds.is_nan() {
                String::new()
            } else {
                s(approx_mds)
            },
        ],
        [
            "lt".into(),
            format!("m_d={m_d}"),
            String::new(),
            s(lo),
            s(hi),
            String::new(),
        ],
    ])
}

fn tail_rows(
    m: usize,
    params: &DelayParams,
    k: usize,
    r: usize,
    c0s: &[f64],
) -> CliResult<Vec<Row>> {
    let bound = |res: Result<f64, Error>, note: &mut Vec<String>| match res {
        Ok(v) => Ok(v.to_string()),
        Err(Error::UndefinedBound(msg)) => {
            note.push(msg);
            Ok(String::new())
        }
        Err(e) => Err(CliError::from(e)),
    };
    let mut rows = Vec::new();
    for &c0 in c0s {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(CliError::usage(format!("--c0 {c0} must be non-negative")));
        }
        let mut note = Vec::new();
        let mds = bound(mds_comp_tail_bound(m, params, k, c0), &mut note)?;
        let rep = bound(rep_comp_tail_bound(m, params, r, c0), &mut note)?;
        let mds_t = if k < params.p {
            mds_theta(params, k, c0).to_string()
        } else {
            String::new()
        };
        let rep_t = if r > 1 {
            rep_theta(params, r, c0).to_string()
        } else {
            String::new()
        };
        rows.push([c0.to_string(), mds_t, mds, rep_t, rep, note.join("; ")]);
    }
    Ok(rows)
}
