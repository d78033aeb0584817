use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

/// Robust Soliton distribution over degrees `1..=m`.
///
/// The pmf is the normalized sum of the ideal soliton
/// `rho(1) = 1/m, rho(d) = 1/(d(d-1))` and the robust term
/// `t(d) = R/(d m)` for `d < ceil(m/R)`, `t(ceil(m/R)) = R ln(R/delta)/m`,
/// with `R = c ln(m/delta) sqrt(m)`.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    m: usize,
    c: f64,
    delta: f64,
    r: f64,
    /// `pmf[d - 1]` is the probability of degree `d`.
    pmf: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

pub fn build_degree_distribution(m: usize, c: f64, delta: f64) -> Result<DegreeDistribution> {
    DegreeDistribution::robust(m, c, delta)
}

impl DegreeDistribution {
    pub fn robust(m: usize, c: f64, delta: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!(
                "m = {m}, need at least 2 source rows"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("c = {c}, must be positive")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!(
                "delta = {delta}, must lie in (0, 1]"
            )));
        }
        let mf = m as f64;
        let r = c * (mf / delta).ln() * mf.sqrt();
        if r >= mf {
            return Err(Error::invalid(format!(
                "R = {r:.4} >= m = {m}; spike index ceil(m/R) = 1 is out of range"
            )));
        }
        let mut weights = ideal_weights(m);
        let spike = (mf / r).ceil() as usize;
        // When R < 1 the spike lies beyond m and only the R/(dm) tail remains.
        for d in 1..spike.min(m + 1) {
            weights[d - 1] += r / (d as f64 * mf);
        }
        if spike <= m {
            weights[spike - 1] += r * (r / delta).ln() / mf;
        }
        Self::from_weights(m, c, delta, r, weights)
    }

    /// Ideal soliton `rho(d)` alone: the `c -> 0` limit of the robust form.
    pub fn ideal(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!(
                "m = {m}, need at least 2 source rows"
            )));
        }
        Self::from_weights(m, 0.0, 1.0, 0.0, ideal_weights(m))
    }

    fn from_weights(m: usize, c: f64, delta: f64, r: f64, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let sampler =
            WeightedIndex::new(&pmf).map_err(|e| Error::invalid(format!("degree weights: {e}")))?;
        Ok(DegreeDistribution {
            m,
            c,
            delta,
            r,
            pmf,
            sampler,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Spike parameter `R`; zero for the ideal soliton.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Degree of the spike, `ceil(m/R)`, when it falls inside `1..=m`.
    pub fn spike_degree(&self) -> Option<usize> {
        if self.r <= 0.0 {
            return None;
        }
        let s = (self.m as f64 / self.r).ceil() as usize;
        (s <= self.m).then_some(s)
    }

    /// Probabilities for degrees `1..=m` (index `d - 1`).
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 || degree > self.m {
            0.0
        } else {
            self.pmf[degree - 1]
        }
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng) + 1
    }
}

fn ideal_weights(m: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(m);
    w.push(1.0 / m as f64);
    for d in 2..=m {
        let d = d as f64;
        w.push(1.0 / (d * (d - 1.0)));
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::seeded_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ideal_soliton_m4() {
        let d = DegreeDistribution::ideal(4).unwrap();
        let want = [0.25, 0.5, 1.0 / 6.0, 1.0 / 12.0];
        for (p, w) in d.pmf().iter().zip(want) {
            assert_abs_diff_eq!(*p, w, epsilon = 1e-15);
        }
    }

    #[test]
    fn robust_normalized_and_r() {
        let d = build_degree_distribution(1000, 0.03, 0.5).unwrap();
        let sum: f64 = d.pmf().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(d.pmf().len(), 1000);
        let r = 0.03 * (1000.0f64 / 0.5).ln() * 1000.0f64.sqrt();
        assert_eq!(d.r(), r);
    }

    #[test]
    fn spike_m1000() {
        // Unnormalized weights evaluated independently of the constructor.
        let m = 1000.0f64;
        let r = 0.03 * (m / 0.5).ln() * m.sqrt();
        let s = (m / r).ceil() as usize;
        assert_eq!(s, 139);
        let w = |d: usize| {
            let df = d as f64;
            let ideal = if d == 1 {
                1.0 / m
            } else {
                1.0 / (df * (df - 1.0))
            };
            let tail = if d < s {
                r / (df * m)
            } else if d == s {
                r * (r / 0.5).ln() / m
            } else {
                0.0
            };
            ideal + tail
        };
        assert!(w(s) > w(s - 1) && w(s) > w(s + 1));

        let dist = build_degree_distribution(1000, 0.03, 0.5).unwrap();
        assert_eq!(dist.spike_degree(), Some(139));
        assert!(dist.prob(139) > dist.prob(138));
        assert!(dist.prob(139) > dist.prob(140));
        let total: f64 = (1..=1000).map(w).sum();
        for d in [1, 2, 50, 138, 139, 140, 1000] {
            assert!((dist.prob(d) - w(d) / total).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_degree_distribution(1, 0.03, 0.5).is_err());
        assert!(build_degree_distribution(100, 0.0, 0.5).is_err());
        assert!(build_degree_distribution(100, 0.03, 0.0).is_err());
        assert!(build_degree_distribution(100, 0.03, 1.5).is_err());
        // R = 5 ln(200) 10 >> 100
        assert!(build_degree_distribution(100, 5.0, 0.5).is_err());
    }

    #[test]
    fn small_m_drops_out_of_range_spike() {
        let d = build_degree_distribution(10, 0.03, 0.5).unwrap();
        assert!(d.r() < 1.0);
        assert_eq!(d.spike_degree(), None);
        assert!((d.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_support() {
        let d = build_degree_distribution(50, 0.1, 0.5).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..10_000 {
            let s = d.sample(&mut rng);
            assert!((1..=50).contains(&s));
        }
    }
}
