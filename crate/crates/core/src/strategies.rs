//! Benchmark strategies: uncoded splitting, r-replication and a systematic
//! (p, k) MDS code over real row blocks.

use std::ops::Range;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{axpy, Matrix};
use crate::par::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// Uncoded splitting is `Replication { r: 1 }`.
    Replication {
        r: usize,
    },
    Mds {
        k: usize,
    },
    Lt {
        alpha: f64,
        c: f64,
        delta: f64,
    },
}

impl Strategy {
    pub fn uncoded() -> Self {
        Strategy::Replication { r: 1 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Replication { r: 1 } => "uncoded",
            Strategy::Replication { .. } => "replication",
            Strategy::Mds { .. } => "mds",
            Strategy::Lt { .. } => "lt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub strategy: Strategy,
    /// Worker count.
    pub p: usize,
}

impl StrategySpec {
    pub fn new(strategy: Strategy, p: usize) -> Self {
        StrategySpec { strategy, p }
    }

    /// Checks the strategy's constraints against `m` source rows.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("p must be at least 1"));
        }
        if m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        match self.strategy {
            Strategy::Replication { r } => check_replication(m, self.p, r),
            Strategy::Mds { k } => check_mds(m, self.p, k),
            Strategy::Lt { alpha, c, delta } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!("alpha = {alpha}, must exceed 1")));
                }
                if c.is_nan() || c <= 0.0 {
                    return Err(Error::invalid(format!("c = {c}, must be positive")));
                }
                if !(delta > 0.0 && delta <= 1.0) {
                    return Err(Error::invalid(format!(
                        "delta = {delta}, must lie in (0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Total encoded rows held across all workers for `m` source rows.
    pub fn encoded_rows(&self, m: usize) -> usize {
        match self.strategy {
            Strategy::Replication { r } => m * r,
            Strategy::Mds { k } => m * self.p / k,
            Strategy::Lt { alpha, .. } => self.p * lt_rows_per_worker(m, self.p, alpha),
        }
    }
}

/// Per-worker LT assignment `ceil(alpha m / p)`.
pub fn lt_rows_per_worker(m: usize, p: usize, alpha: f64) -> usize {
    (alpha * m as f64 / p as f64).ceil() as usize
}

fn check_replication(m: usize, p: usize, r: usize) -> Result<()> {
    if r == 0 || !p.is_multiple_of(r) {
        return Err(Error::invalid(format!("r = {r} must divide p = {p}")));
    }
    let groups = p / r;
    if !m.is_multiple_of(groups) {
        return Err(Error::invalid(format!(
            "p/r = {groups} must divide m = {m}"
        )));
    }
    Ok(())
}

fn check_mds(m: usize, p: usize, k: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={p}")));
    }
    if !m.is_multiple_of(k) {
        return Err(Error::invalid(format!("k = {k} must divide m = {m}")));
    }
    Ok(())
}

/// Which encoded rows each worker holds. Blocks are contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub blocks: Vec<Range<usize>>,
    pub rows_per_worker: usize,
}

impl Assignment {
    /// `p` equal contiguous blocks over `0..m_e`.
    pub fn contiguous(m_e: usize, p: usize) -> Result<Self> {
        if p == 0 || !m_e.is_multiple_of(p) {
            return Err(Error::invalid(format!(
                "{m_e} encoded rows do not split over {p} workers"
            )));
        }
        let per = m_e / p;
        Ok(Assignment {
            blocks: (0..p).map(|w| w * per..(w + 1) * per).collect(),
            rows_per_worker: per,
        })
    }

    pub fn workers(&self) -> usize {
        self.blocks.len()
    }
}

/// Source rows split into `p/r` blocks, block `g` stored on workers
/// `g r .. (g + 1) r`.
pub fn replication_plan(m: usize, p: usize, r: usize) -> Result<Assignment> {
    check_replication(m, p, r)?;
    let per = m * r / p;
    Ok(Assignment {
        blocks: (0..p).map(|w| (w / r) * per..(w / r + 1) * per).collect(),
        rows_per_worker: per,
    })
}

/// Plan for any strategy over its encoded row space.
pub fn plan(spec: &StrategySpec, m: usize) -> Result<Assignment> {
    spec.validate(m)?;
    match spec.strategy {
        Strategy::Replication { r } => replication_plan(m, spec.p, r),
        _ => Assignment::contiguous(spec.encoded_rows(m), spec.p),
    }
}

/// Assembles `b` from one complete result vector per replication group.
pub fn replication_decode(group_results: &[Vec<f64>]) -> Vec<f64> {
    group_results.concat()
}

/// Generator `G = [I_k; P]` of a systematic real (p, k) code.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    p: usize,
    k: usize,
    /// Row-major p x k.
    coeffs: Vec<f64>,
}

impl Generator {
    /// Systematic generator with the given `(p - k) x k` parity rows.
    pub fn systematic(k: usize, parity: &[Vec<f64>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let p = k + parity.len();
        let mut coeffs = vec![0.0; p * k];
        for i in 0..k {
            coeffs[i * k + i] = 1.0;
        }
        for (row, par) in parity.iter().enumerate() {
            if par.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "parity row {row} has {} entries, expected {k}",
                    par.len()
                )));
            }
            coeffs[(k + row) * k..(k + row + 1) * k].copy_from_slice(par);
        }
        Ok(Generator { p, k, coeffs })
    }

    /// Parity drawn i.i.d. standard normal from `seed`; any `k` rows are
    /// invertible with probability one.
    pub fn gaussian(p: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > p {
            return Err(Error::invalid(format!("k = {k} must lie in 1..={p}")));
        }
        let mut rng = seeded_rng(seed);
        let parity: Vec<Vec<f64>> = (0..p - k)
            .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        Self::systematic(k, &parity)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.k..(i + 1) * self.k]
    }
}

/// Encodes `a` into `p` blocks of `m/k` rows; block `i` is
/// `sum_j G[i][j] A_j`. Returns the stacked `(m p / k) x n` matrix.
pub fn mds_encode(a: &Matrix, p: usize, k: usize, seed: u64) -> Result<(Matrix, Generator)> {
    check_mds(a.rows(), p, k)?;
    let g = Generator::gaussian(p, k, seed)?;
    Ok((mds_encode_with(a, &g)?, g))
}

pub fn mds_encode_with(a: &Matrix, g: &Generator) -> Result<Matrix> {
    let (p, k) = (g.p(), g.k());
    check_mds(a.rows(), p, k)?;
    let block = a.rows() / k;
    let mut out = Matrix::zeros(block * p, a.cols());
    for i in 0..p {
        for (j, &coef) in g.row(i).iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            for t in 0..block {
                axpy(out.row_mut(i * block + t), coef, a.row(j * block + t));
            }
        }
    }
    Ok(out)
}

/// Recovers `b = A x` from any `k` block products `A_e,i x`.
pub fn mds_decode(available: &[Vec<f64>], block_ids: &[usize], g: &Generator) -> Result<Vec<f64>> {
    let k = g.k();
    if available.len() != k || block_ids.len() != k {
        return Err(Error::invalid(format!(
            "need exactly k = {k} blocks, got {} results for {} ids",
            available.len(),
            block_ids.len()
        )));
    }
    let mut sorted = block_ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("block ids must be distinct"));
    }
    if let Some(&bad) = sorted.iter().find(|&&b| b >= g.p()) {
        return Err(Error::invalid(format!("block id {bad} >= p = {}", g.p())));
    }
    let len = available[0].len();
    if available.iter().any(|v| v.len() != len) {
        return Err(Error::DimensionMismatch(
            "block results differ in length".into(),
        ));
    }

    if sorted.iter().enumerate().all(|(i, &b)| i == b) {
        // Systematic blocks only.
        let mut out = vec![Vec::new(); k];
        for (res, &id) in available.iter().zip(block_ids) {
            out[id] = res.clone();
        }
        return Ok(out.concat());
    }

    let lhs = DMatrix::from_fn(k, k, |r, c| g.row(block_ids[r])[c]);
    let rhs = DMatrix::from_fn(k, len, |r, c| available[r][c]);
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DecodeFailure("generator submatrix is singular".into()))?;
    let mut b = Vec::with_capacity(k * len);
    for r in 0..k {
        b.extend(sol.row(r).iter());
    }
    Ok(b)
}
