#![allow(dead_code)]

use std::net::TcpListener;
use std::path::Path;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use ratelessmv::runtime::{
    master_run, matfile, resolve, worker_run, DelayInjection, JobManifest, MasterConfig,
    RetryPolicy, RunReport, WorkerConfig, WorkerReport, MANIFEST_FILE,
};
use ratelessmv::Result;

pub struct WorkerPlan {
    pub delay: DelayInjection,
    pub fail_after: Option<usize>,
}

impl WorkerPlan {
    pub fn per_task(ms: u64) -> Self {
        WorkerPlan {
            delay: DelayInjection {
                initial: Duration::ZERO,
                per_task: Duration::from_millis(ms),
            },
            fail_after: None,
        }
    }
}

/// Launches one thread per manifest worker against a loopback master and
/// runs the master on the current thread.
pub fn run_local_job(
    dir: &Path,
    x: &[f64],
    plans: Vec<WorkerPlan>,
) -> (Result<RunReport>, Vec<Result<WorkerReport>>) {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = JobManifest::load(&manifest_path).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();

    let handles: Vec<JoinHandle<Result<WorkerReport>>> = manifest
        .workers
        .iter()
        .zip(plans)
        .map(|(entry, plan)| {
            let rows = matfile::load_matrix(&resolve(&manifest_path, &entry.file)).unwrap();
            let cfg = WorkerConfig {
                worker_id: entry.id,
                start_index: entry.start_index,
                rows,
                master: addr.clone(),
                delay: plan.delay,
                retry: RetryPolicy {
                    attempts: 50,
                    interval: Duration::from_millis(20),
                },
                fail_after: plan.fail_after,
            };
            thread::spawn(move || worker_run(cfg))
        })
        .collect();

    let report = master_run(None, x, &manifest, &listener, &MasterConfig::default());
    let workers = handles.into_iter().map(|h| h.join().unwrap()).collect();
    (report, workers)
}
