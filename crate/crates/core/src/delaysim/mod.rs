//! Monte-Carlo simulation of latency and work under the shifted-exponential
//! delay model: worker `i` starts after `X_i ~ Exp(mu)` and then completes
//! one row-vector product every `tau`.
//!
//! Every trial function comes in two forms: a seeded one that draws the
//! delays, and a `*_with_delays` one taking the delays explicitly.

mod engine;
mod montecarlo;
mod trials;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{completed_by, CompletionEvent, CompletionMerge};
pub use montecarlo::{run_monte_carlo, MonteCarlo, MonteCarloReport, Summary};
pub use trials::{
    lt_trial_with_delays, mds_trial_event_merge, mds_trial_with_delays, rep_trial_event_merge,
    rep_trial_with_delays, simulate_lt_trial, simulate_mds_trial, simulate_rep_trial,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayParams {
    /// Rate of the exponential start-up delay (1/time).
    pub mu: f64,
    /// Time per row-vector product.
    pub tau: f64,
    /// Worker count.
    pub p: usize,
}

impl DelayParams {
    pub fn new(mu: f64, tau: f64, p: usize) -> Result<Self> {
        let params = DelayParams { mu, tau, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!(
                "mu = {}, must be positive",
                self.mu
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!(
                "tau = {}, must be positive",
                self.tau
            )));
        }
        if self.p == 0 {
            return Err(Error::invalid("p must be at least 1"));
        }
        Ok(())
    }

    /// Draws `X_1..X_p`.
    pub fn sample_delays<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let exp = Exp::new(self.mu).expect("validated rate");
        (0..self.p).map(|_| exp.sample(rng)).collect()
    }

    fn check_delays(&self, delays: &[f64]) -> Result<()> {
        if delays.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "{} delays for p = {} workers",
                delays.len(),
                self.p
            )));
        }
        if delays.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("delays must be finite and non-negative"));
        }
        Ok(())
    }
}

/// How the LT decoding threshold `m_d` is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LtThreshold {
    /// `m_d = ceil((1 + epsilon) m)`.
    Fixed { epsilon: f64 },
    /// `m_d` = a sampled `M'`: fresh graph, uniformly random arrival order,
    /// peeling decoder run to completion.
    Coupled { c: f64, delta: f64 },
}

impl LtThreshold {
    pub fn fixed_threshold(m: usize, epsilon: f64) -> usize {
        ((1.0 + epsilon) * m as f64).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Latency `T`.
    pub latency: f64,
    /// Completed tasks per worker at `T`.
    pub per_worker: Vec<usize>,
    /// `C = sum_i C_i`.
    pub total: usize,
    /// LT decoding threshold used.
    pub m_d: Option<usize>,
    /// Some worker exhausted its assignment before `T`.
    pub cap_bound: bool,
    /// Fresh LT graphs discarded because they never decoded.
    pub decode_retries: usize,
}

impl TrialOutcome {
    fn new(latency: f64, per_worker: Vec<usize>, cap: usize) -> Self {
        let total = per_worker.iter().sum();
        let cap_bound = per_worker.iter().any(|&c| c >= cap);
        TrialOutcome {
            latency,
            per_worker,
            total,
            m_d: None,
            cap_bound,
            decode_retries: 0,
        }
    }
}
