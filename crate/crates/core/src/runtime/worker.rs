use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use rand_distr::{Distribution, Exp};

use super::wire::{read_frame, write_frame, WireMessage};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::par::seeded_rng;

/// Artificial slowdown applied by a worker: one initial sleep, then a sleep
/// before every row-vector product.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DelayInjection {
    pub initial: Duration,
    pub per_task: Duration,
}

impl DelayInjection {
    /// Initial sleep drawn from `Exp(mu)` seconds, `tau` seconds per task.
    pub fn exponential(mu: f64, tau: f64, seed: u64) -> Result<Self> {
        let exp = Exp::new(mu).map_err(|e| Error::invalid(format!("mu = {mu}: {e}")))?;
        let initial = exp.sample(&mut seeded_rng(seed));
        Ok(DelayInjection {
            initial: Duration::from_secs_f64(initial),
            per_task: Duration::from_secs_f64(tau),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub interval: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 20,
            interval: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorkerConfig {
    pub worker_id: u32,
    /// Encoded index of `rows.row(0)`.
    pub start_index: usize,
    pub rows: Matrix,
    pub master: String,
    pub delay: DelayInjection,
    pub retry: RetryPolicy,
    /// Drop the connection after this many results, simulating a crash.
    pub fail_after: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerExit {
    /// Master sent Done.
    Done,
    /// `fail_after` triggered.
    Crashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerReport {
    pub results_sent: usize,
    pub finished_block: bool,
    pub exit: WorkerExit,
}

pub fn connect_with_retry(addr: &str, retry: &RetryPolicy) -> Result<TcpStream> {
    let mut last = None;
    for attempt in 0..retry.attempts.max(1) {
        if attempt > 0 {
            thread::sleep(retry.interval);
        }
        let addrs = match addr.to_socket_addrs() {
            Ok(a) => a,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        for sa in addrs {
            match TcpStream::connect(sa) {
                Ok(s) => {
                    s.set_nodelay(true)?;
                    return Ok(s);
                }
                Err(e) => last = Some(e),
            }
        }
        debug!("connect to {addr} failed, attempt {}", attempt + 1);
    }
    Err(Error::Io(last.unwrap_or_else(|| {
        std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{addr} did not resolve"),
        )
    })))
}

enum Control {
    Done,
    Lost(String),
}

/// Connects to the master, announces itself, waits for `x`, then streams one
/// Result frame per row in ascending encoded-index order until Done arrives.
/// A worker that finishes its block sends a final Progress frame and idles.
pub fn worker_run(cfg: WorkerConfig) -> Result<WorkerReport> {
    let stream = connect_with_retry(&cfg.master, &cfg.retry)?;
    let mut writer = stream.try_clone()?;
    let mut reader = stream;

    write_frame(
        &mut writer,
        &WireMessage::Setup {
            worker_id: cfg.worker_id,
            m: cfg.rows.rows() as u64,
            n: cfg.rows.cols() as u64,
        },
    )?;

    let x = match read_frame(&mut reader)? {
        Some(WireMessage::Vector(x)) => x,
        Some(WireMessage::Done) => {
            return Ok(WorkerReport {
                results_sent: 0,
                finished_block: false,
                exit: WorkerExit::Done,
            })
        }
        Some(WireMessage::Error(text)) => {
            return Err(Error::Setup(format!("master refused: {text}")))
        }
        Some(other) => return Err(Error::Protocol(format!("expected Vector, got {other:?}"))),
        None => return Err(Error::JobFailure("master closed before sending x".into())),
    };
    if x.len() != cfg.rows.cols() {
        let msg = format!("x has {} entries, rows have {}", x.len(), cfg.rows.cols());
        let _ = write_frame(&mut writer, &WireMessage::Error(msg.clone()));
        return Err(Error::DimensionMismatch(msg));
    }

    let control = spawn_control_reader(reader);

    let mut sent = 0;
    if wait_or_stop(&control, cfg.delay.initial)? {
        return Ok(report(sent, false, WorkerExit::Done));
    }
    for (local, row) in cfg.rows.iter_rows().enumerate() {
        if wait_or_stop(&control, cfg.delay.per_task)? {
            return Ok(report(sent, false, WorkerExit::Done));
        }
        let value = dot(row, &x);
        write_frame(
            &mut writer,
            &WireMessage::Result {
                encoded_index: (cfg.start_index + local) as u64,
                value,
            },
        )?;
        sent += 1;
        if cfg.fail_after == Some(sent) {
            warn!(
                "worker {} simulating a crash after {sent} results",
                cfg.worker_id
            );
            let _ = writer.shutdown(Shutdown::Both);
            return Ok(report(sent, false, WorkerExit::Crashed));
        }
    }

    write_frame(&mut writer, &WireMessage::Progress(sent as u64))?;
    match control.recv() {
        Ok(Control::Done) => Ok(report(sent, true, WorkerExit::Done)),
        Ok(Control::Lost(why)) => Err(Error::JobFailure(why)),
        Err(_) => Err(Error::JobFailure("control channel closed".into())),
    }
}

fn report(results_sent: usize, finished_block: bool, exit: WorkerExit) -> WorkerReport {
    WorkerReport {
        results_sent,
        finished_block,
        exit,
    }
}

fn spawn_control_reader(mut reader: TcpStream) -> Receiver<Control> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || loop {
        let msg = match read_frame(&mut reader) {
            Ok(Some(WireMessage::Done)) => Control::Done,
            Ok(Some(other)) => {
                debug!("worker ignoring {other:?}");
                continue;
            }
            Ok(None) => Control::Lost("master closed the connection".into()),
            Err(e) => Control::Lost(e.to_string()),
        };
        let _ = tx.send(msg);
        return;
    });
    rx
}

/// Sleeps for `d` unless a control message arrives first. `Ok(true)` means
/// stop (Done received).
fn wait_or_stop(control: &Receiver<Control>, d: Duration) -> Result<bool> {
    let msg = if d.is_zero() {
        match control.try_recv() {
            Ok(m) => m,
            Err(TryRecvError::Empty) => return Ok(false),
            Err(TryRecvError::Disconnected) => {
                return Err(Error::JobFailure("control channel closed".into()))
            }
        }
    } else {
        match control.recv_timeout(d) {
            Ok(m) => m,
            Err(RecvTimeoutError::Timeout) => return Ok(false),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::JobFailure("control channel closed".into()))
            }
        }
    };
    match msg {
        Control::Done => Ok(true),
        Control::Lost(why) => Err(Error::JobFailure(why)),
    }
}
