//! Staging, master and worker entry points for real distributed runs.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use rand::Rng;
use ratelessmv::par::seeded_rng;
use ratelessmv::runtime::{
    encode_and_stage, master_run, matfile, resolve, worker_run, DelayInjection, JobManifest,
    MasterConfig, RetryPolicy, WorkerConfig, WorkerExit, MANIFEST_FILE,
};
use ratelessmv::strategies::StrategySpec;
use ratelessmv::Matrix;
use serde::Serialize;

use crate::args::{resolve_seed, StrategyArgs};
use crate::error::{CliError, CliResult};
use crate::output::{config_header, csv_stdout, ensure_dir};

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long)]
    pub p: usize,
    /// Matrix file to encode.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    pub input: Option<PathBuf>,
    /// Generate a random integer matrix with this many rows instead.
    #[arg(long, requires = "cols")]
    pub rows: Option<usize>,
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EncodeResolved {
    spec: StrategySpec,
    input: String,
    m: usize,
    n: usize,
    seed: u64,
    out: PathBuf,
}

pub fn encode(args: &EncodeArgs) -> CliResult {
    let spec = StrategySpec::new(args.strategy.resolve()?, args.p);
    let seed = resolve_seed(args.seed);
    ensure_dir(&args.out)?;
    let (a, input) = match (&args.input, args.rows, args.cols) {
        (Some(path), _, _) => (matfile::load_matrix(path)?, path.display().to_string()),
        (None, Some(m), Some(n)) => {
            let a = Matrix::random_integer(m, n, -10, 10, &mut seeded_rng(seed));
            let path = args.out.join("matrix.cmv");
            matfile::save_matrix(&path, &a)?;
            (a, path.display().to_string())
        }
        _ => return Err(CliError::usage("give --input or both --rows and --cols")),
    };
    spec.validate(a.rows())?;
    let manifest = encode_and_stage(&a, &spec, seed, &args.out)?;
    let header = config_header(
        "encode",
        &EncodeResolved {
            spec,
            input,
            m: a.rows(),
            n: a.cols(),
            seed,
            out: args.out.clone(),
        },
    )?;
    let mut w = csv_stdout(&header)?;
    w.write_record(["worker", "file", "start_index", "count"])?;
    for e in &manifest.workers {
        w.write_record([
            e.id.to_string(),
            e.file.display().to_string(),
            e.start_index.to_string(),
            e.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct MasterArgs {
    /// Manifest file or staging directory.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7070")]
    pub listen: String,
    /// Vector file (a single row or column); random integers when omitted.
    #[arg(long)]
    pub vector: Option<PathBuf>,
    /// Seed for the random vector.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source matrix to verify the result against.
    #[arg(long)]
    pub check: Option<PathBuf>,
    /// Write b here as a one-column matrix file.
    #[arg(long)]
    pub result: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub accept_timeout: f64,
    #[arg(long, default_value_t = 300.0)]
    pub job_timeout: f64,
}

#[derive(Serialize)]
struct MasterResolved {
    manifest: PathBuf,
    listen: String,
    vector: String,
    check: Option<PathBuf>,
    accept_timeout: f64,
    job_timeout: f64,
}

fn seconds(flag: &str, v: f64) -> CliResult<Duration> {
    Duration::try_from_secs_f64(v)
        .map_err(|_| CliError::usage(format!("--{flag} {v} is not a valid duration")))
}

fn load_vector(path: &Path) -> CliResult<Vec<f64>> {
    let v = matfile::load_matrix(path)?;
    if v.rows() != 1 && v.cols() != 1 {
        return Err(CliError::usage(format!(
            "{} is {}x{}, expected a single row or column",
            path.display(),
            v.rows(),
            v.cols()
        )));
    }
    Ok(v.as_slice().to_vec())
}

pub fn master(args: &MasterArgs) -> CliResult {
    let manifest = JobManifest::load(&manifest_path(&args.manifest))?;
    let config = MasterConfig {
        accept_timeout: seconds("accept-timeout", args.accept_timeout)?,
        job_timeout: seconds("job-timeout", args.job_timeout)?,
    };
    let (x, vector) = match &args.vector {
        Some(path) => (load_vector(path)?, path.display().to_string()),
        None => {
            let seed = resolve_seed(args.seed);
            let mut rng = seeded_rng(seed);
            let x = (0..manifest.n)
                .map(|_| rng.random_range(-10..=10) as f64)
                .collect();
            (x, format!("random integers, seed {seed}"))
        }
    };
    let a = args
        .check
        .as_deref()
        .map(matfile::load_matrix)
        .transpose()?;
    let header = config_header(
        "master",
        &MasterResolved {
            manifest: args.manifest.clone(),
            listen: args.listen.clone(),
            vector,
            check: args.check.clone(),
            accept_timeout: args.accept_timeout,
            job_timeout: args.job_timeout,
        },
    )?;

    let listener = TcpListener::bind(&args.listen)
        .map_err(|e| CliError::failure(format!("bind {}: {e}", args.listen)))?;
    log::info!("listening on {}", listener.local_addr()?);
    let report = master_run(a.as_ref(), &x, &manifest, &listener, &config)?;

    let max_error = match &a {
        Some(a) => {
            let want = a.matvec(&x)?;
            let err = report
                .b
                .iter()
                .zip(&want)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            let scale = want.iter().map(|v| v.abs()).fold(1.0, f64::max);
            Some((err, scale))
        }
        None => None,
    };
    if let Some(path) = &args.result {
        matfile::save_matrix(
            path,
            &Matrix::from_vec(report.b.len(), 1, report.b.clone())?,
        )?;
    }

    let mut w = csv_stdout(&header)?;
    let mut cols = vec![
        "decode_time_s".to_string(),
        "results_used".into(),
        "max_abs_error".into(),
    ];
    cols.extend((0..report.per_worker.len()).map(|i| format!("worker_{i}")));
    w.write_record(&cols)?;
    let mut row = vec![
        report.decode_time.as_secs_f64().to_string(),
        report.results_used.to_string(),
        max_error.map(|(e, _)| e.to_string()).unwrap_or_default(),
    ];
    row.extend(report.per_worker.iter().map(|c| c.to_string()));
    w.write_record(&row)?;
    w.flush()?;

    match max_error {
        Some((err, scale)) if err > 1e-9 * scale => Err(CliError::failure(format!(
            "result differs from A x by {err}"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct WorkerArgs {
    /// Manifest file or staging directory.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub id: u32,
    /// Master address.
    #[arg(long)]
    pub master: String,
    /// Sleep before the first task, in milliseconds.
    #[arg(long, default_value_t = 0, conflicts_with = "mu")]
    pub initial_ms: u64,
    /// Sleep per task, in milliseconds.
    #[arg(long, default_value_t = 0, conflicts_with = "tau")]
    pub per_task_ms: u64,
    /// Draw the initial sleep from Exp(mu) seconds instead.
    #[arg(long, requires = "tau")]
    pub mu: Option<f64>,
    /// Seconds per task, used with --mu.
    #[arg(long, requires = "mu")]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulate a crash after this many results.
    #[arg(long)]
    pub fail_after: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub retries: u32,
    #[arg(long, default_value_t = 250)]
    pub retry_interval_ms: u64,
}

#[derive(Serialize)]
struct WorkerResolved {
    manifest: PathBuf,
    id: u32,
    master: String,
    initial_s: f64,
    per_task_s: f64,
    fail_after: Option<usize>,
    retries: u32,
    retry_interval_ms: u64,
}

pub fn worker(args: &WorkerArgs) -> CliResult {
    let path = manifest_path(&args.manifest);
    let manifest = JobManifest::load(&path)?;
    let entry = manifest.worker(args.id)?;
    let rows = matfile::load_matrix(&resolve(&path, &entry.file))?;
    let delay = match (args.mu, args.tau) {
        (Some(mu), Some(tau)) => DelayInjection::exponential(mu, tau, resolve_seed(args.seed))?,
        _ => DelayInjection {
            initial: Duration::from_millis(args.initial_ms),
            per_task: Duration::from_millis(args.per_task_ms),
        },
    };
    let retry = RetryPolicy {
        attempts: args.retries,
        interval: Duration::from_millis(args.retry_interval_ms),
    };
    let header = config_header(
        "worker",
        &WorkerResolved {
            manifest: args.manifest.clone(),
            id: args.id,
            master: args.master.clone(),
            initial_s: delay.initial.as_secs_f64(),
            per_task_s: delay.per_task.as_secs_f64(),
            fail_after: args.fail_after,
            retries: args.retries,
            retry_interval_ms: args.retry_interval_ms,
        },
    )?;
    let report = worker_run(WorkerConfig {
        worker_id: args.id,
        start_index: entry.start_index,
        rows,
        master: args.master.clone(),
        delay,
        retry,
        fail_after: args.fail_after,
    })?;
    let mut w = csv_stdout(&header)?;
    w.write_record(["worker", "results_sent", "finished_block", "exit"])?;
    let exit = match report.exit {
        WorkerExit::Done => "done",
        WorkerExit::Crashed => "crashed",
    };
    w.write_record([
        args.id.to_string(),
        report.results_sent.to_string(),
        report.finished_block.to_string(),
        exit.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Accepts either a manifest file or the staging directory holding it.
fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}
