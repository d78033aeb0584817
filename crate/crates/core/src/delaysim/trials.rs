use rand::Rng;

use super::engine::{completed_by, finish_time, CompletionMerge};
use super::{DelayParams, LtThreshold, TrialOutcome};
use crate::error::{Error, Result};
use crate::ltcode::{build_degree_distribution, sample_decode_threshold, DegreeDistribution};
use crate::par::seeded_rng;
use crate::strategies::lt_rows_per_worker;

const MAX_DECODE_RETRIES: usize = 64;

/// LT trial: `T` is the time of the `m_d`-th completion across all workers,
/// each capped at `cap` tasks.
pub fn lt_trial_with_delays(
    params: &DelayParams,
    cap: usize,
    m_d: usize,
    delays: &[f64],
) -> Result<TrialOutcome> {
    params.validate()?;
    params.check_delays(delays)?;
    if m_d == 0 {
        return Err(Error::invalid("m_d must be at least 1"));
    }
    if cap.saturating_mul(params.p) < m_d {
        return Err(Error::invalid(format!(
            "p * cap = {} cannot reach m_d = {m_d}",
            cap * params.p
        )));
    }
    let mut counts = vec![0usize; params.p];
    let mut latency = 0.0;
    for ev in CompletionMerge::new(delays, params.tau, cap).take(m_d) {
        counts[ev.worker] += 1;
        latency = ev.time;
    }
    let mut out = TrialOutcome::new(latency, counts, cap);
    out.m_d = Some(m_d);
    Ok(out)
}

pub fn simulate_lt_trial(
    m: usize,
    params: &DelayParams,
    alpha: f64,
    threshold: LtThreshold,
    seed: u64,
) -> Result<TrialOutcome> {
    let dist = match threshold {
        LtThreshold::Coupled { c, delta } => Some(build_degree_distribution(m, c, delta)?),
        LtThreshold::Fixed { .. } => None,
    };
    lt_trial(
        m,
        params,
        alpha,
        threshold,
        dist.as_ref(),
        &mut seeded_rng(seed),
    )
}

pub(crate) fn lt_trial<R: Rng + ?Sized>(
    m: usize,
    params: &DelayParams,
    alpha: f64,
    threshold: LtThreshold,
    dist: Option<&DegreeDistribution>,
    rng: &mut R,
) -> Result<TrialOutcome> {
    params.validate()?;
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha = {alpha}, must exceed 1")));
    }
    let cap = lt_rows_per_worker(m, params.p, alpha);
    let delays = params.sample_delays(rng);
    let (m_d, retries) = match threshold {
        LtThreshold::Fixed { epsilon } => {
            if epsilon.is_nan() || epsilon < 0.0 {
                return Err(Error::invalid(format!("epsilon = {epsilon}, must be >= 0")));
            }
            (LtThreshold::fixed_threshold(m, epsilon), 0)
        }
        LtThreshold::Coupled { .. } => {
            let dist =
                dist.ok_or_else(|| Error::invalid("coupled threshold needs a distribution"))?;
            let m_e = cap * params.p;
            let mut retries = 0;
            loop {
                if let Some(used) = sample_decode_threshold(dist, m_e, rng)? {
                    break (used, retries);
                }
                retries += 1;
                if retries > MAX_DECODE_RETRIES {
                    return Err(Error::DecodeFailure(format!(
                        "{MAX_DECODE_RETRIES} consecutive LT graphs failed to decode from {m_e} symbols"
                    )));
                }
            }
        }
    };
    let mut out = lt_trial_with_delays(params, cap, m_d, &delays)?;
    out.decode_retries = retries;
    Ok(out)
}

fn mds_block(m: usize, p: usize, k: usize) -> Result<usize> {
    if k == 0 || k > p || !m.is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "MDS needs 1 <= k <= p and k | m (m = {m}, p = {p}, k = {k})"
        )));
    }
    Ok(m / k)
}

fn rep_block(m: usize, p: usize, r: usize) -> Result<usize> {
    if r == 0 || !p.is_multiple_of(r) || !m.is_multiple_of(p / r) {
        return Err(Error::invalid(format!(
            "replication needs r | p and (p/r) | m (m = {m}, p = {p}, r = {r})"
        )));
    }
    Ok(m * r / p)
}

/// MDS trial via order statistics: `T` is the `k`-th smallest of
/// `X_i + tau m / k`.
pub fn mds_trial_with_delays(
    m: usize,
    params: &DelayParams,
    k: usize,
    delays: &[f64],
) -> Result<TrialOutcome> {
    params.check_delays(delays)?;
    let per = mds_block(m, params.p, k)?;
    let mut order: Vec<usize> = (0..params.p).collect();
    let finish = |i: usize| finish_time(delays[i], params.tau, per);
    order.sort_by(|&a, &b| finish(a).total_cmp(&finish(b)).then(a.cmp(&b)));
    let latency = finish(order[k - 1]);
    let mut counts = vec![0usize; params.p];
    for (rank, &w) in order.iter().enumerate() {
        counts[w] = if rank < k {
            per
        } else {
            completed_by(delays[w], params.tau, latency, per)
        };
    }
    Ok(TrialOutcome::new(latency, counts, per))
}

/// MDS trial driven by the completion-stream merge; must agree with
/// [`mds_trial_with_delays`].
pub fn mds_trial_event_merge(
    m: usize,
    params: &DelayParams,
    k: usize,
    delays: &[f64],
) -> Result<TrialOutcome> {
    params.check_delays(delays)?;
    let per = mds_block(m, params.p, k)?;
    let mut merge = CompletionMerge::new(delays, params.tau, per);
    let mut counts = vec![0usize; params.p];
    let mut finished = 0;
    let mut latency = f64::NAN;
    for ev in merge.by_ref() {
        counts[ev.worker] += 1;
        if ev.task == per {
            finished += 1;
            if finished == k {
                latency = ev.time;
                break;
            }
        }
    }
    drain_until(&mut merge, latency, &mut counts);
    Ok(TrialOutcome::new(latency, counts, per))
}

/// Replication trial via order statistics: `T = max_g min_{i in g} X_i + tau m r / p`.
pub fn rep_trial_with_delays(
    m: usize,
    params: &DelayParams,
    r: usize,
    delays: &[f64],
) -> Result<TrialOutcome> {
    params.check_delays(delays)?;
    let per = rep_block(m, params.p, r)?;
    let mut fastest = Vec::with_capacity(params.p / r);
    for g in 0..params.p / r {
        let w = (g * r..(g + 1) * r)
            .min_by(|&a, &b| delays[a].total_cmp(&delays[b]).then(a.cmp(&b)))
            .unwrap();
        fastest.push(w);
    }
    let latency = fastest
        .iter()
        .map(|&w| finish_time(delays[w], params.tau, per))
        .fold(f64::NEG_INFINITY, f64::max);
    let counts = (0..params.p)
        .map(|w| {
            if fastest[w / r] == w {
                per
            } else {
                completed_by(delays[w], params.tau, latency, per)
            }
        })
        .collect();
    Ok(TrialOutcome::new(latency, counts, per))
}

/// Replication trial driven by the completion-stream merge.
pub fn rep_trial_event_merge(
    m: usize,
    params: &DelayParams,
    r: usize,
    delays: &[f64],
) -> Result<TrialOutcome> {
    params.check_delays(delays)?;
    let per = rep_block(m, params.p, r)?;
    let groups = params.p / r;
    let mut merge = CompletionMerge::new(delays, params.tau, per);
    let mut counts = vec![0usize; params.p];
    let mut done = vec![false; groups];
    let mut remaining = groups;
    let mut latency = f64::NAN;
    for ev in merge.by_ref() {
        counts[ev.worker] += 1;
        let g = ev.worker / r;
        if ev.task == per && !done[g] {
            done[g] = true;
            remaining -= 1;
            if remaining == 0 {
                latency = ev.time;
                break;
            }
        }
    }
    drain_until(&mut merge, latency, &mut counts);
    Ok(TrialOutcome::new(latency, counts, per))
}

fn drain_until(merge: &mut CompletionMerge<'_>, t: f64, counts: &mut [usize]) {
    while merge.peek().is_some_and(|e| e.time <= t) {
        let ev = merge.next().unwrap();
        counts[ev.worker] += 1;
    }
}

pub fn simulate_mds_trial(
    m: usize,
    params: &DelayParams,
    k: usize,
    seed: u64,
) -> Result<TrialOutcome> {
    params.validate()?;
    let delays = params.sample_delays(&mut seeded_rng(seed));
    mds_trial_with_delays(m, params, k, &delays)
}

pub fn simulate_rep_trial(
    m: usize,
    params: &DelayParams,
    r: usize,
    seed: u64,
) -> Result<TrialOutcome> {
    params.validate()?;
    let delays = params.sample_delays(&mut seeded_rng(seed));
    rep_trial_with_delays(m, params, r, &delays)
}
