use rand::seq::index;

use super::distribution::DegreeDistribution;
use crate::error::{Error, Result};
use crate::matrix::{axpy, Matrix};
use crate::par::seeded_rng;

/// Bipartite map from encoded rows to the source rows summed into them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingGraph {
    m: usize,
    seed: u64,
    /// Sorted, duplicate-free source indices per encoded row.
    neighbors: Vec<Vec<u32>>,
}

/// Graph with `ceil(alpha * m)` encoded rows.
pub fn generate_graph(
    m: usize,
    alpha: f64,
    dist: &DegreeDistribution,
    seed: u64,
) -> Result<EncodingGraph> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha = {alpha}, must exceed 1")));
    }
    let m_e = (alpha * m as f64).ceil() as usize;
    if m_e < m + 1 {
        return Err(Error::invalid(format!(
            "alpha * m = {} gives no redundant rows",
            alpha * m as f64
        )));
    }
    EncodingGraph::generate(m, m_e, dist, seed)
}

impl EncodingGraph {
    /// Draws `m_e` encoded rows: a degree from `dist`, then that many distinct
    /// source rows uniformly without replacement. Pure in `(dist, m_e, seed)`.
    pub fn generate(m: usize, m_e: usize, dist: &DegreeDistribution, seed: u64) -> Result<Self> {
        Self::generate_with(m, m_e, dist, &mut seeded_rng(seed), seed)
    }

    pub(crate) fn generate_with<R: rand::Rng + ?Sized>(
        m: usize,
        m_e: usize,
        dist: &DegreeDistribution,
        rng: &mut R,
        seed: u64,
    ) -> Result<Self> {
        if dist.m() != m {
            return Err(Error::DimensionMismatch(format!(
                "distribution over {} sources used for m = {m}",
                dist.m()
            )));
        }
        if m > u32::MAX as usize {
            return Err(Error::invalid(format!("m = {m} exceeds u32 range")));
        }
        let neighbors = (0..m_e)
            .map(|_| {
                let d = dist.sample(rng);
                let mut set: Vec<u32> = index::sample(rng, m, d)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect();
                set.sort_unstable();
                set
            })
            .collect();
        Ok(EncodingGraph { m, seed, neighbors })
    }

    /// Graph from explicit neighbour sets. Sets are sorted and checked for
    /// range and duplicates.
    pub fn from_neighbors(m: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut neighbors = Vec::with_capacity(sets.len());
        for (j, mut set) in sets.into_iter().enumerate() {
            set.sort_unstable();
            if set.is_empty() {
                return Err(Error::invalid(format!("encoded row {j} has no neighbours")));
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!(
                    "encoded row {j} repeats a source row"
                )));
            }
            if *set.last().unwrap() >= m {
                return Err(Error::invalid(format!(
                    "encoded row {j} references a source row >= m = {m}"
                )));
            }
            neighbors.push(set.into_iter().map(|i| i as u32).collect());
        }
        Ok(EncodingGraph {
            m,
            seed: 0,
            neighbors,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of encoded rows.
    pub fn m_e(&self) -> usize {
        self.neighbors.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn neighbors(&self, j: usize) -> &[u32] {
        &self.neighbors[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.neighbors[j].len()
    }

    pub fn mean_degree(&self) -> f64 {
        let total: usize = self.neighbors.iter().map(Vec::len).sum();
        total as f64 / self.m_e() as f64
    }

    /// Encoded symbol `j` given the source symbols.
    pub fn encode_symbol(&self, j: usize, source: &[f64]) -> f64 {
        self.neighbors[j].iter().map(|&i| source[i as usize]).sum()
    }
}

/// Row `j` of the result is the sum of rows `S_j` of `a`.
pub fn encode_matrix(a: &Matrix, graph: &EncodingGraph) -> Result<Matrix> {
    if a.rows() != graph.m() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, graph expects {}",
            a.rows(),
            graph.m()
        )));
    }
    let mut out = Matrix::zeros(graph.m_e(), a.cols());
    for j in 0..graph.m_e() {
        let row = out.row_mut(j);
        for &i in graph.neighbors(j) {
            axpy(row, 1.0, a.row(i as usize));
        }
    }
    Ok(out)
}
