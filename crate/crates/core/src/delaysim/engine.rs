use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// Completion of task number `task` (1-based) by `worker` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionEvent {
    pub time: f64,
    pub worker: usize,
    pub task: usize,
}

impl Eq for CompletionEvent {}

impl Ord for CompletionEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.worker.cmp(&other.worker))
    }
}

impl PartialOrd for CompletionEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time at which a worker with start-up delay `x` finishes task `j`.
#[inline]
pub(crate) fn finish_time(x: f64, tau: f64, j: usize) -> f64 {
    x + j as f64 * tau
}

/// Tasks completed by time `t` (inclusive), capped at `cap`. Uses the same
/// arithmetic as [`CompletionMerge`] so both agree at boundaries.
pub fn completed_by(x: f64, tau: f64, t: f64, cap: usize) -> usize {
    if t < x {
        return 0;
    }
    let mut j = (((t - x) / tau).floor() as usize).min(cap);
    while j < cap && finish_time(x, tau, j + 1) <= t {
        j += 1;
    }
    while j > 0 && finish_time(x, tau, j) > t {
        j -= 1;
    }
    j
}

/// Merges the per-worker completion streams `X_i + j tau`, `j = 1..=cap`,
/// in time order; simultaneous events come out by ascending worker index.
#[derive(Debug, Clone)]
pub struct CompletionMerge<'a> {
    delays: &'a [f64],
    tau: f64,
    cap: usize,
    heap: BinaryHeap<Reverse<CompletionEvent>>,
}

impl<'a> CompletionMerge<'a> {
    pub fn new(delays: &'a [f64], tau: f64, cap: usize) -> Self {
        let mut heap = BinaryHeap::with_capacity(delays.len());
        if cap > 0 {
            for (worker, &x) in delays.iter().enumerate() {
                heap.push(Reverse(CompletionEvent {
                    time: finish_time(x, tau, 1),
                    worker,
                    task: 1,
                }));
            }
        }
        CompletionMerge {
            delays,
            tau,
            cap,
            heap,
        }
    }

    pub fn peek(&self) -> Option<&CompletionEvent> {
        self.heap.peek().map(|r| &r.0)
    }
}

impl Iterator for CompletionMerge<'_> {
    type Item = CompletionEvent;

    fn next(&mut self) -> Option<CompletionEvent> {
        let Reverse(ev) = self.heap.pop()?;
        if ev.task < self.cap {
            let task = ev.task + 1;
            self.heap.push(Reverse(CompletionEvent {
                time: finish_time(self.delays[ev.worker], self.tau, task),
                worker: ev.worker,
                task,
            }));
        }
        Some(ev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_order_and_ties() {
        let d = [0.0, 0.0];
        let ev: Vec<_> = CompletionMerge::new(&d, 1.0, 2)
            .map(|e| (e.time, e.worker))
            .collect();
        assert_eq!(ev, vec![(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1)]);
    }

    #[test]
    fn completed_by_matches_enumeration() {
        let xs = [0.0, 0.1, 0.37, 1.3];
        let tau = 0.1;
        for &x in &xs {
            for step in 0..200 {
                let t = step as f64 * 0.013;
                let brute = (1..=7).filter(|&j| finish_time(x, tau, j) <= t).count();
                assert_eq!(completed_by(x, tau, t, 7), brute, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn merge_respects_cap() {
        let d = [0.5, 0.0, 2.0];
        let n = CompletionMerge::new(&d, 0.25, 3).count();
        assert_eq!(n, 9);
        let times: Vec<f64> = CompletionMerge::new(&d, 0.25, 3).map(|e| e.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }
}
