//! Master/worker runtime over TCP.
//!
//! Workers dial the master, announce themselves with a Setup frame, receive
//! `x`, and push one Result frame per encoded row until the master sends
//! Done. Rows are staged on disk by [`encode_and_stage`].

mod manifest;
mod master;
pub mod matfile;
mod stage;
pub mod wire;
mod worker;

pub use manifest::{resolve, JobManifest, WorkerEntry, MANIFEST_FILE};
pub use master::{master_run, MasterConfig, ResultCollector, RunReport};
pub use stage::encode_and_stage;
pub use wire::WireMessage;
pub use worker::{
    connect_with_retry, worker_run, DelayInjection, RetryPolicy, WorkerConfig, WorkerExit,
    WorkerReport,
};
