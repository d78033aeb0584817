use super::trials::{lt_trial, mds_trial_with_delays, rep_trial_with_delays};
use super::{DelayParams, LtThreshold, TrialOutcome};
use crate::error::{Error, Result};
use crate::ltcode::build_degree_distribution;
use crate::par::{map_indexed, trial_rng, Execution};
use crate::strategies::{Strategy, StrategySpec};

/// Monte-Carlo run configuration. Trial `t` draws from stream `t` of `seed`,
/// so results do not depend on [`Execution`].
#[derive(Debug, Clone, Copy)]
pub struct MonteCarlo {
    pub m: usize,
    pub params: DelayParams,
    pub trials: usize,
    pub seed: u64,
    /// LT threshold mode; `None` couples to the strategy's `(c, delta)`.
    pub lt_threshold: Option<LtThreshold>,
    pub execution: Execution,
}

impl MonteCarlo {
    pub fn new(m: usize, params: DelayParams, trials: usize, seed: u64) -> Self {
        MonteCarlo {
            m,
            params,
            trials,
            seed,
            lt_threshold: None,
            execution: Execution::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: LtThreshold) -> Self {
        self.lt_threshold = Some(threshold);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn run(&self, spec: &StrategySpec) -> Result<MonteCarloReport> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        self.params.validate()?;
        if spec.p != self.params.p {
            return Err(Error::invalid(format!(
                "strategy has p = {} but delay model has p = {}",
                spec.p, self.params.p
            )));
        }
        spec.validate(self.m)?;
        let (m, params, seed) = (self.m, self.params, self.seed);

        let outcomes: Vec<TrialOutcome> = match spec.strategy {
            Strategy::Lt { alpha, c, delta } => {
                let threshold = self
                    .lt_threshold
                    .unwrap_or(LtThreshold::Coupled { c, delta });
                let dist = match threshold {
                    LtThreshold::Coupled { c, delta } => {
                        Some(build_degree_distribution(m, c, delta)?)
                    }
                    LtThreshold::Fixed { .. } => None,
                };
                map_indexed(self.trials, self.execution, |t| {
                    let mut rng = trial_rng(seed, t as u64);
                    lt_trial(m, &params, alpha, threshold, dist.as_ref(), &mut rng)
                })
                .into_iter()
                .collect::<Result<_>>()?
            }
            Strategy::Mds { k } => map_indexed(self.trials, self.execution, |t| {
                let delays = params.sample_delays(&mut trial_rng(seed, t as u64));
                mds_trial_with_delays(m, &params, k, &delays)
            })
            .into_iter()
            .collect::<Result<_>>()?,
            Strategy::Replication { r } => map_indexed(self.trials, self.execution, |t| {
                let delays = params.sample_delays(&mut trial_rng(seed, t as u64));
                rep_trial_with_delays(m, &params, r, &delays)
            })
            .into_iter()
            .collect::<Result<_>>()?,
        };

        let summary = Summary::from_outcomes(&outcomes);
        Ok(MonteCarloReport {
            spec: *spec,
            m,
            params,
            outcomes,
            summary,
        })
    }
}

pub fn run_monte_carlo(
    spec: &StrategySpec,
    m: usize,
    params: &DelayParams,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    MonteCarlo::new(m, *params, trials, seed).run(spec)
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub spec: StrategySpec,
    pub m: usize,
    pub params: DelayParams,
    pub outcomes: Vec<TrialOutcome>,
    pub summary: Summary,
}

impl MonteCarloReport {
    /// Empirical `Pr(T > t)`.
    pub fn latency_tail(&self, t: f64) -> f64 {
        self.fraction(|o| o.latency > t)
    }

    /// Empirical `Pr(C > c)`.
    pub fn computation_tail(&self, c: f64) -> f64 {
        self.fraction(|o| o.total as f64 > c)
    }

    /// Empirical `Pr(C >= c)`.
    pub fn computation_at_least(&self, c: f64) -> f64 {
        self.fraction(|o| o.total as f64 >= c)
    }

    pub fn latency_tail_grid(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter().map(|&t| (t, self.latency_tail(t))).collect()
    }

    pub fn computation_tail_grid(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter()
            .map(|&c| (c, self.computation_tail(c)))
            .collect()
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.latency).collect()
    }

    fn fraction(&self, pred: impl Fn(&TrialOutcome) -> bool) -> f64 {
        self.outcomes.iter().filter(|o| pred(o)).count() as f64 / self.outcomes.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub latency_mean: f64,
    pub latency_std: f64,
    pub computations_mean: f64,
    pub computations_std: f64,
    /// `(q, value)` for q in [`Summary::QUANTILES`].
    pub latency_quantiles: Vec<(f64, f64)>,
    pub computation_quantiles: Vec<(f64, f64)>,
    pub m_d_mean: Option<f64>,
    /// Fraction of trials in which some worker exhausted its assignment.
    pub cap_binding: f64,
    pub decode_retries: usize,
}

impl Summary {
    pub const QUANTILES: [f64; 5] = [0.1, 0.5, 0.9, 0.95, 0.99];

    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let lat: Vec<f64> = outcomes.iter().map(|o| o.latency).collect();
        let comp: Vec<f64> = outcomes.iter().map(|o| o.total as f64).collect();
        let (latency_mean, latency_std) = mean_std(&lat);
        let (computations_mean, computations_std) = mean_std(&comp);
        let m_ds: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.m_d)
            .map(|v| v as f64)
            .collect();
        let n = outcomes.len().max(1) as f64;
        Summary {
            trials: outcomes.len(),
            latency_mean,
            latency_std,
            computations_mean,
            computations_std,
            latency_quantiles: quantiles(&lat, &Self::QUANTILES),
            computation_quantiles: quantiles(&comp, &Self::QUANTILES),
            m_d_mean: (!m_ds.is_empty()).then(|| mean_std(&m_ds).0),
            cap_binding: outcomes.iter().filter(|o| o.cap_bound).count() as f64 / n,
            decode_retries: outcomes.iter().map(|o| o.decode_retries).sum(),
        }
    }

    /// Standard error of the mean latency.
    pub fn latency_sem(&self) -> f64 {
        self.latency_std / (self.trials as f64).sqrt()
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linearly interpolated sample quantiles.
pub fn quantiles(xs: &[f64], qs: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    qs.iter()
        .map(|&q| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            (q, sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
        })
        .collect()
}
