use std::collections::HashMap;
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info, warn};

use super::manifest::JobManifest;
use super::wire::{read_frame, write_frame, WireMessage};
use crate::error::{Error, Result};
use crate::ltcode::{DecoderState, EncodingGraph};
use crate::matrix::Matrix;
use crate::strategies::{mds_decode, replication_decode, Generator, Strategy};

#[derive(Debug, Clone)]
pub struct MasterConfig {
    /// How long to wait for all workers to connect.
    pub accept_timeout: Duration,
    /// Upper bound on the whole job once `x` is broadcast.
    pub job_timeout: Duration,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            accept_timeout: Duration::from_secs(30),
            job_timeout: Duration::from_secs(300),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub b: Vec<f64>,
    /// From broadcasting `x` to a decodable set of results.
    pub decode_time: Duration,
    /// Results the decoder consumed (`M'` for LT).
    pub results_used: usize,
    /// Results received before completion, per worker.
    pub per_worker: Vec<usize>,
}

/// Accumulates worker results until `b` can be recovered. Once complete,
/// further results are ignored.
#[derive(Debug)]
pub struct ResultCollector {
    kind: CollectorKind,
    complete: bool,
    per_worker: Vec<usize>,
    late: usize,
}

#[derive(Debug)]
enum CollectorKind {
    Lt {
        graph: EncodingGraph,
        state: DecoderState,
    },
    /// Replication and MDS: whole blocks, one buffer per worker.
    Blocks {
        blocks: Vec<Block>,
        /// Replication group size, or `None` for MDS.
        replicas: Option<usize>,
        chosen: Vec<usize>,
        needed: usize,
        generator: Option<Generator>,
    },
}

#[derive(Debug)]
struct Block {
    start: usize,
    values: Vec<Option<f64>>,
    filled: usize,
}

impl ResultCollector {
    pub fn for_manifest(manifest: &JobManifest) -> Result<Self> {
        manifest.validate()?;
        let p = manifest.p();
        let blocks = || {
            manifest
                .workers
                .iter()
                .map(|w| Block {
                    start: w.start_index,
                    values: vec![None; w.count],
                    filled: 0,
                })
                .collect()
        };
        let kind = match manifest.strategy {
            Strategy::Lt { .. } => {
                let graph = manifest.lt_graph()?;
                let state = DecoderState::new(&graph);
                CollectorKind::Lt { graph, state }
            }
            Strategy::Replication { r } => CollectorKind::Blocks {
                blocks: blocks(),
                replicas: Some(r),
                chosen: Vec::new(),
                needed: p / r,
                generator: None,
            },
            Strategy::Mds { k } => CollectorKind::Blocks {
                blocks: blocks(),
                replicas: None,
                chosen: Vec::new(),
                needed: k,
                generator: Some(manifest.mds_generator()?),
            },
        };
        Ok(ResultCollector {
            kind,
            complete: false,
            per_worker: vec![0; p],
            late: 0,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Results that arrived after completion.
    pub fn late_results(&self) -> usize {
        self.late
    }

    pub fn per_worker(&self) -> &[usize] {
        &self.per_worker
    }

    /// Whether `worker` has delivered every row it holds.
    pub fn worker_exhausted(&self, worker: usize, assigned: usize) -> bool {
        self.per_worker[worker] >= assigned
    }

    /// Returns `true` once `b` is recoverable.
    pub fn ingest(&mut self, worker: usize, encoded_index: usize, value: f64) -> Result<bool> {
        if self.complete {
            self.late += 1;
            return Ok(true);
        }
        if worker >= self.per_worker.len() {
            return Err(Error::Protocol(format!("unknown worker {worker}")));
        }
        self.per_worker[worker] += 1;
        self.complete = match &mut self.kind {
            CollectorKind::Lt { graph, state } => {
                state.ingest(graph, encoded_index, value)?.complete
            }
            CollectorKind::Blocks {
                blocks,
                replicas,
                chosen,
                needed,
                ..
            } => {
                let blk = &mut blocks[worker];
                let local = encoded_index
                    .checked_sub(blk.start)
                    .filter(|&l| l < blk.values.len())
                    .ok_or_else(|| {
                        Error::Protocol(format!(
                            "worker {worker} sent index {encoded_index} outside its block"
                        ))
                    })?;
                if blk.values[local].replace(value).is_some() {
                    return Err(Error::DuplicateSymbol(encoded_index));
                }
                blk.filled += 1;
                if blk.filled == blk.values.len() {
                    let group = replicas.map(|r| worker / r);
                    let taken = match group {
                        Some(g) => chosen.iter().any(|&w| w / replicas.unwrap() == g),
                        None => false,
                    };
                    if !taken {
                        chosen.push(worker);
                    }
                }
                chosen.len() == *needed
            }
        };
        Ok(self.complete)
    }

    /// Number of results consumed to decode.
    pub fn results_used(&self) -> usize {
        match &self.kind {
            CollectorKind::Lt { state, .. } => state.received(),
            CollectorKind::Blocks { blocks, chosen, .. } => {
                chosen.iter().map(|&w| blocks[w].values.len()).sum()
            }
        }
    }

    pub fn decoded_count(&self) -> usize {
        match &self.kind {
            CollectorKind::Lt { state, .. } => state.decoded_count(),
            CollectorKind::Blocks { blocks, chosen, .. } => {
                chosen.iter().map(|&w| blocks[w].values.len()).sum()
            }
        }
    }

    pub fn finish(&self) -> Result<Vec<f64>> {
        if !self.complete {
            return Err(Error::JobFailure("not enough results to decode".into()));
        }
        match &self.kind {
            CollectorKind::Lt { state, .. } => Ok(state.values().expect("complete")),
            CollectorKind::Blocks {
                blocks,
                replicas,
                chosen,
                generator,
                ..
            } => {
                let vals = |w: usize| -> Vec<f64> {
                    blocks[w]
                        .values
                        .iter()
                        .map(|v| v.expect("filled"))
                        .collect()
                };
                match (replicas, generator) {
                    (Some(r), _) => {
                        let mut order = chosen.clone();
                        order.sort_by_key(|&w| w / r);
                        let groups: Vec<Vec<f64>> = order.into_iter().map(vals).collect();
                        Ok(replication_decode(&groups))
                    }
                    (None, Some(g)) => {
                        let results: Vec<Vec<f64>> = chosen.iter().map(|&w| vals(w)).collect();
                        mds_decode(&results, chosen, g)
                    }
                    (None, None) => unreachable!("MDS collector always has a generator"),
                }
            }
        }
    }
}

enum Event {
    Frame(WireMessage),
    Closed(Option<String>),
}

/// Runs one job: waits for every worker in the manifest to connect on
/// `listener`, broadcasts `x`, decodes incrementally and broadcasts Done as
/// soon as `b` is recoverable.
///
/// When `a` is given its shape is checked against the manifest.
pub fn master_run(
    a: Option<&Matrix>,
    x: &[f64],
    manifest: &JobManifest,
    listener: &TcpListener,
    config: &MasterConfig,
) -> Result<RunReport> {
    manifest.validate()?;
    if let Some(a) = a {
        if a.rows() != manifest.m || a.cols() != manifest.n {
            return Err(Error::Setup(format!(
                "matrix is {}x{}, manifest says {}x{}",
                a.rows(),
                a.cols(),
                manifest.m,
                manifest.n
            )));
        }
    }
    if x.len() != manifest.n {
        return Err(Error::Setup(format!(
            "x has {} entries, manifest says n = {}",
            x.len(),
            manifest.n
        )));
    }
    let p = manifest.p();
    let mut collector = ResultCollector::for_manifest(manifest)?;
    let mut writers = Connections(accept_workers(listener, manifest, config.accept_timeout)?);

    let (tx, rx) = mpsc::channel();
    for (&id, stream) in writers.0.iter() {
        spawn_reader(id, stream.try_clone()?, tx.clone());
    }
    drop(tx);

    let start = Instant::now();
    let vector = WireMessage::Vector(x.to_vec());
    for stream in writers.0.values_mut() {
        write_frame(stream, &vector)?;
    }
    info!("broadcast x to {p} workers");

    let mut closed = vec![false; p];
    let mut exhausted = vec![false; p];
    let deadline = start + config.job_timeout;
    while !collector.is_complete() {
        let now = Instant::now();
        if now >= deadline {
            return Err(job_failure("job timed out", &collector));
        }
        let (worker, event) = match rx.recv_timeout(deadline - now) {
            Ok(ev) => ev,
            Err(RecvTimeoutError::Timeout) => return Err(job_failure("job timed out", &collector)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(job_failure("all workers disconnected", &collector))
            }
        };
        match event {
            Event::Frame(WireMessage::Result {
                encoded_index,
                value,
            }) => {
                collector.ingest(worker, encoded_index as usize, value)?;
                if collector.worker_exhausted(worker, manifest.workers[worker].count) {
                    exhausted[worker] = true;
                }
            }
            Event::Frame(WireMessage::Progress(count)) => {
                debug!("worker {worker} progress {count}");
                if count as usize >= manifest.workers[worker].count {
                    exhausted[worker] = true;
                }
            }
            Event::Frame(WireMessage::Error(text)) => {
                warn!("worker {worker} reported: {text}");
                closed[worker] = true;
            }
            Event::Frame(other) => {
                warn!("worker {worker} sent unexpected {other:?}");
            }
            Event::Closed(why) => {
                warn!(
                    "worker {worker} disconnected{}",
                    why.map(|w| format!(": {w}")).unwrap_or_default()
                );
                closed[worker] = true;
                writers.0.remove(&(worker as u32));
            }
        }
        if !collector.is_complete() && (0..p).all(|w| closed[w] || exhausted[w]) {
            return Err(job_failure(
                "remaining workers cannot supply enough results",
                &collector,
            ));
        }
    }
    let decode_time = start.elapsed();

    for stream in writers.0.values_mut() {
        // a straggler may already be gone
        let _ = write_frame(stream, &WireMessage::Done);
    }
    info!(
        "decoded after {} results in {decode_time:?}",
        collector.results_used()
    );

    Ok(RunReport {
        b: collector.finish()?,
        decode_time,
        results_used: collector.results_used(),
        per_worker: collector.per_worker().to_vec(),
    })
}

/// Closes every worker connection when the job ends, successfully or not,
/// so idle workers and reader threads unblock.
struct Connections(HashMap<u32, TcpStream>);

impl Drop for Connections {
    fn drop(&mut self) {
        for stream in self.0.values() {
            let _ = stream.shutdown(Shutdown::Both);
        }
    }
}

fn job_failure(reason: &str, collector: &ResultCollector) -> Error {
    Error::JobFailure(format!(
        "{reason}; decoded {} values from {} results (per worker {:?})",
        collector.decoded_count(),
        collector.per_worker().iter().sum::<usize>(),
        collector.per_worker()
    ))
}

fn accept_workers(
    listener: &TcpListener,
    manifest: &JobManifest,
    timeout: Duration,
) -> Result<HashMap<u32, TcpStream>> {
    let p = manifest.p();
    let deadline = Instant::now() + timeout;
    listener.set_nonblocking(true)?;
    let mut workers = HashMap::with_capacity(p);
    while workers.len() < p {
        let (mut stream, peer) = match listener.accept() {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    listener.set_nonblocking(false)?;
                    return Err(Error::Setup(format!(
                        "only {} of {p} workers connected",
                        workers.len()
                    )));
                }
                thread::sleep(Duration::from_millis(5));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        stream.set_nonblocking(false)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        let setup = read_frame(&mut stream)?;
        stream.set_read_timeout(None)?;
        let (id, rows, n) = match setup {
            Some(WireMessage::Setup { worker_id, m, n }) => (worker_id, m as usize, n as usize),
            other => {
                let _ = write_frame(&mut stream, &WireMessage::Error("expected Setup".into()));
                return Err(Error::Setup(format!("{peer} opened with {other:?}")));
            }
        };
        let check = manifest.worker(id).and_then(|entry| {
            if workers.contains_key(&id) {
                Err(Error::Setup(format!("worker {id} connected twice")))
            } else if rows != entry.count || n != manifest.n {
                Err(Error::Setup(format!(
                    "worker {id} holds {rows}x{n}, manifest expects {}x{}",
                    entry.count, manifest.n
                )))
            } else {
                Ok(())
            }
        });
        if let Err(e) = check {
            let _ = write_frame(&mut stream, &WireMessage::Error(e.to_string()));
            return Err(e);
        }
        debug!("worker {id} connected from {peer}");
        workers.insert(id, stream);
    }
    listener.set_nonblocking(false)?;
    Ok(workers)
}

fn spawn_reader(id: u32, mut stream: TcpStream, tx: Sender<(usize, Event)>) {
    thread::spawn(move || loop {
        match read_frame(&mut stream) {
            Ok(Some(msg)) => {
                if tx.send((id as usize, Event::Frame(msg))).is_err() {
                    // master finished; late frames are dropped
                    return;
                }
            }
            Ok(None) => {
                let _ = tx.send((id as usize, Event::Closed(None)));
                return;
            }
            Err(e) => {
                let _ = tx.send((id as usize, Event::Closed(Some(e.to_string()))));
                return;
            }
        }
    });
}
