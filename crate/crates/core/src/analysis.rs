//! Closed-form latency expectations and computation tail bounds under the
//! shifted-exponential delay model, built on exponential order statistics.

use crate::delaysim::DelayParams;
use crate::error::{Error, Result};

/// Cached harmonic numbers `H_0 ..= H_J`, `H_0 = 0`.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    values: Vec<f64>,
}

impl HarmonicTable {
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        values.push(acc);
        for v in 1..=max {
            acc += 1.0 / v as f64;
            values.push(acc);
        }
        HarmonicTable { values }
    }

    pub fn max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// `H_j = sum_{v=1}^{j} 1/v`, with `H_0 = 0`.
pub fn harmonic(j: usize) -> f64 {
    (1..=j).map(|v| 1.0 / v as f64).sum()
}

/// `E[X_{j:p}] = (H_p - H_{p-j}) / mu` for i.i.d. `Exp(mu)` delays.
pub fn exp_order_stat_mean(p: usize, j: usize, mu: f64) -> Result<f64> {
    if j == 0 || j > p {
        return Err(Error::invalid(format!("order {j} outside 1..={p}")));
    }
    Ok((harmonic(p) - harmonic(p - j)) / mu)
}

/// Lower and upper bounds on `E[T_LT]` for a decoding threshold `m_d`.
pub fn lt_latency_bounds(m_d: usize, params: &DelayParams) -> Result<(f64, f64)> {
    if m_d == 0 {
        return Err(Error::invalid("m_d must be at least 1"));
    }
    let p = params.p as f64;
    let work = params.tau * m_d as f64 / p;
    Ok((
        work + 1.0 / (p * params.mu),
        work + 1.0 / params.mu + params.tau,
    ))
}

/// Same bounds with a real-valued (e.g. averaged) threshold.
pub fn lt_latency_bounds_f(m_d: f64, params: &DelayParams) -> (f64, f64) {
    let p = params.p as f64;
    let work = params.tau * m_d / p;
    (
        work + 1.0 / (p * params.mu),
        work + 1.0 / params.mu + params.tau,
    )
}

/// `E[T_rep] = tau m r / p + H_{p/r} / (r mu)`.
///
/// The fastest of `r` replicas has an `Exp(r mu)` head start, hence the
/// `1/(r mu)` scale on the straggling term.
pub fn rep_latency_mean(m: usize, params: &DelayParams, r: usize) -> Result<f64> {
    let p = params.p;
    check_rep(m, p, r)?;
    let rf = r as f64;
    Ok(params.tau * (m * r) as f64 / p as f64 + harmonic(p / r) / (rf * params.mu))
}

/// `E[T_MDS] = tau m / k + (H_p - H_{p-k}) / mu`.
pub fn mds_latency_mean(m: usize, params: &DelayParams, k: usize) -> Result<f64> {
    let p = params.p;
    check_mds(m, p, k)?;
    Ok(params.tau * m as f64 / k as f64 + exp_order_stat_mean(p, k, params.mu)?)
}

/// Log-approximation counterparts (display only).
pub fn rep_latency_mean_approx(m: usize, params: &DelayParams, r: usize) -> f64 {
    let p = params.p as f64;
    let rf = r as f64;
    params.tau * m as f64 * rf / p + (p / rf).ln() / (rf * params.mu)
}

pub fn mds_latency_mean_approx(m: usize, params: &DelayParams, k: usize) -> f64 {
    let p = params.p as f64;
    let kf = k as f64;
    let straggle = if k == params.p {
        f64::NAN
    } else {
        (p / (p - kf)).ln() / params.mu
    };
    params.tau * m as f64 / kf + straggle
}

/// `theta_MDS = tau C0 / (p-k)^2 - tau / (p-k)`.
pub fn mds_theta(params: &DelayParams, k: usize, c0: f64) -> f64 {
    let gap = (params.p - k) as f64;
    params.tau * c0 / (gap * gap) - params.tau / gap
}

/// Lower bound on `Pr(C_MDS >= m p / k - C0)`: `1 - exp(-mu theta)`, or 0
/// when `theta <= 0`.
pub fn mds_comp_tail_bound(m: usize, params: &DelayParams, k: usize, c0: f64) -> Result<f64> {
    check_mds(m, params.p, k)?;
    if k == params.p {
        return Err(Error::UndefinedBound(
            "k = p leaves no redundant workers; C_MDS = m deterministically".into(),
        ));
    }
    let theta = mds_theta(params, k, c0);
    if theta <= 0.0 {
        return Ok(0.0);
    }
    Ok(-(-params.mu * theta).exp_m1())
}

/// `theta_rep = tau C0 / (r-1)^2 - tau p / (r (r-1))`.
pub fn rep_theta(params: &DelayParams, r: usize, c0: f64) -> f64 {
    let rf = r as f64;
    params.tau * c0 / ((rf - 1.0) * (rf - 1.0)) - params.tau * params.p as f64 / (rf * (rf - 1.0))
}

/// Lower bound on `Pr(C_rep >= r m - C0)`: the CDF of an Erlang(p/r, mu)
/// variable at `theta`, or 0 when `theta <= 0`.
pub fn rep_comp_tail_bound(m: usize, params: &DelayParams, r: usize, c0: f64) -> Result<f64> {
    check_rep(m, params.p, r)?;
    if r == 1 {
        return Err(Error::UndefinedBound(
            "r = 1 is uncoded; C_rep = m deterministically".into(),
        ));
    }
    let theta = rep_theta(params, r, c0);
    if theta <= 0.0 {
        return Ok(0.0);
    }
    Ok(erlang_cdf(params.p / r, params.mu * theta))
}

/// `1 - sum_{i<n} e^{-x} x^i / i!`.
pub fn erlang_cdf(n: usize, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut tail = 0.0;
    for i in 0..n {
        if i > 0 {
            term *= x / i as f64;
        }
        tail += term;
    }
    (1.0 - tail).clamp(0.0, 1.0)
}

fn check_rep(m: usize, p: usize, r: usize) -> Result<()> {
    if r == 0 || !p.is_multiple_of(r) || !m.is_multiple_of(p / r) {
        return Err(Error::invalid(format!(
            "replication needs r | p and (p/r) | m (m = {m}, p = {p}, r = {r})"
        )));
    }
    Ok(())
}

fn check_mds(m: usize, p: usize, k: usize) -> Result<()> {
    if k == 0 || k > p || !m.is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "MDS needs 1 <= k <= p and k | m (m = {m}, p = {p}, k = {k})"
        )));
    }
    Ok(())
}
