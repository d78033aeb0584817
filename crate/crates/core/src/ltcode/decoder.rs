use std::collections::VecDeque;

use super::graph::EncodingGraph;
use crate::error::{Error, Result};

/// Incremental peeling decoder.
///
/// Each ingested symbol is reduced by the already-decoded sources it touches.
/// A symbol left with exactly one unknown source joins the ripple; popping
/// it (FIFO) decodes that source, which is then subtracted from every other
/// active symbol. Symbols whose residual degree drops to zero are retired.
#[derive(Debug, Clone)]
pub struct DecoderState {
    m: usize,
    m_e: usize,
    received: usize,
    seen: Vec<bool>,
    value: Vec<f64>,
    /// Residual degree; zero means not received yet or retired.
    degree: Vec<u32>,
    /// XOR of the remaining unknown source indices. For a degree-one symbol
    /// this is the index of the single unknown.
    unknown_xor: Vec<u32>,
    /// Active symbols touching each undecoded source.
    touching: Vec<Vec<u32>>,
    ripple: VecDeque<u32>,
    decoded: Vec<Option<f64>>,
    decoded_count: usize,
}

/// Result of ingesting one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ingest {
    /// Sources newly decoded by this symbol (including the avalanche it set off).
    pub newly_decoded: usize,
    pub decoded_count: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Complete {
        values: Vec<f64>,
        /// Number of symbols ingested when the last source was decoded.
        used: usize,
    },
    NeedMore {
        decoded_count: usize,
        received: usize,
    },
}

impl DecodeOutcome {
    pub fn is_complete(&self) -> bool {
        matches!(self, DecodeOutcome::Complete { .. })
    }
}

impl DecoderState {
    pub fn new(graph: &EncodingGraph) -> Self {
        let m = graph.m();
        let m_e = graph.m_e();
        DecoderState {
            m,
            m_e,
            received: 0,
            seen: vec![false; m_e],
            value: vec![0.0; m_e],
            degree: vec![0; m_e],
            unknown_xor: vec![0; m_e],
            touching: vec![Vec::new(); m],
            ripple: VecDeque::new(),
            decoded: vec![None; m],
            decoded_count: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn received(&self) -> usize {
        self.received
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded_count
    }

    pub fn is_complete(&self) -> bool {
        self.decoded_count == self.m
    }

    pub fn decoded(&self, source: usize) -> Option<f64> {
        self.decoded[source]
    }

    /// Decoded source values once every source is known.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.is_complete()
            .then(|| self.decoded.iter().map(|v| v.unwrap()).collect())
    }

    /// Residual degree of an active symbol, `None` if it is not active.
    pub fn residual_degree(&self, encoded_index: usize) -> Option<usize> {
        match self.degree.get(encoded_index) {
            Some(&d) if d > 0 => Some(d as usize),
            _ => None,
        }
    }

    pub fn ripple_len(&self) -> usize {
        self.ripple.len()
    }

    pub fn ingest(
        &mut self,
        graph: &EncodingGraph,
        encoded_index: usize,
        value: f64,
    ) -> Result<Ingest> {
        if graph.m() != self.m || graph.m_e() != self.m_e {
            return Err(Error::DimensionMismatch(format!(
                "decoder built for a {}x{} graph, got {}x{}",
                self.m_e,
                self.m,
                graph.m_e(),
                graph.m()
            )));
        }
        if encoded_index >= self.m_e {
            return Err(Error::InvalidIndex {
                index: encoded_index,
                count: self.m_e,
            });
        }
        if self.seen[encoded_index] {
            return Err(Error::DuplicateSymbol(encoded_index));
        }
        self.seen[encoded_index] = true;
        self.received += 1;
        let before = self.decoded_count;

        let j = encoded_index;
        let mut residual = value;
        let mut degree = 0u32;
        let mut xor = 0u32;
        for &i in graph.neighbors(j) {
            match self.decoded[i as usize] {
                Some(v) => residual -= v,
                None => {
                    degree += 1;
                    xor ^= i;
                    self.touching[i as usize].push(j as u32);
                }
            }
        }
        self.value[j] = residual;
        self.degree[j] = degree;
        self.unknown_xor[j] = xor;
        if degree == 1 {
            self.ripple.push_back(j as u32);
        }
        self.peel();

        Ok(Ingest {
            newly_decoded: self.decoded_count - before,
            decoded_count: self.decoded_count,
            complete: self.is_complete(),
        })
    }

    fn peel(&mut self) {
        while let Some(j) = self.ripple.pop_front() {
            let j = j as usize;
            // Another ripple entry may already have decoded this symbol's source.
            if self.degree[j] != 1 {
                continue;
            }
            let source = self.unknown_xor[j] as usize;
            let v = self.value[j];
            self.degree[j] = 0;
            self.decoded[source] = Some(v);
            self.decoded_count += 1;

            for k in std::mem::take(&mut self.touching[source]) {
                let k = k as usize;
                if k == j || self.degree[k] == 0 {
                    continue;
                }
                self.value[k] -= v;
                self.unknown_xor[k] ^= source as u32;
                self.degree[k] -= 1;
                if self.degree[k] == 1 {
                    self.ripple.push_back(k as u32);
                }
            }
        }
    }
}

/// Feeds `symbols` in order until every source is decoded.
pub fn decode_full<I>(symbols: I, graph: &EncodingGraph) -> Result<DecodeOutcome>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut state = DecoderState::new(graph);
    for (index, value) in symbols {
        if state.ingest(graph, index, value)?.complete {
            return Ok(DecodeOutcome::Complete {
                values: state.values().unwrap(),
                used: state.received(),
            });
        }
    }
    Ok(DecodeOutcome::NeedMore {
        decoded_count: state.decoded_count(),
        received: state.received(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltcode::{build_degree_distribution, generate_graph};
    use crate::par::seeded_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn graph(m: usize, sets: &[&[usize]]) -> EncodingGraph {
        EncodingGraph::from_neighbors(m, sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn four_symbol_example() {
        // b = [1, 2, 3, 4]; symbols b1+b2+b3, b2+b4, b3, b4 (0-based below)
        let g = graph(4, &[&[0, 1, 2], &[1, 3], &[2], &[3]]);
        let out = decode_full([(0, 6.0), (1, 6.0), (2, 3.0), (3, 4.0)], &g).unwrap();
        assert_eq!(
            out,
            DecodeOutcome::Complete {
                values: vec![1.0, 2.0, 3.0, 4.0],
                used: 4
            }
        );
    }

    #[test]
    fn singletons() {
        let g = graph(3, &[&[0], &[1], &[2]]);
        let out = decode_full([(0, 5.0), (1, 7.0), (2, 9.0)], &g).unwrap();
        match out {
            DecodeOutcome::Complete { values, used } => {
                assert_eq!(values, vec![5.0, 7.0, 9.0]);
                assert_eq!(used, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stalls_without_degree_one() {
        let g = graph(2, &[&[0, 1]]);
        let out = decode_full([(0, 3.0)], &g).unwrap();
        assert_eq!(
            out,
            DecodeOutcome::NeedMore {
                decoded_count: 0,
                received: 1
            }
        );
    }

    #[test]
    fn duplicate_rejected_state_unchanged() {
        let g = graph(2, &[&[0, 1], &[1]]);
        let mut st = DecoderState::new(&g);
        st.ingest(&g, 0, 3.0).unwrap();
        let before = (st.received(), st.decoded_count(), st.residual_degree(0));
        assert!(matches!(
            st.ingest(&g, 0, 3.0),
            Err(Error::DuplicateSymbol(0))
        ));
        assert_eq!(
            before,
            (st.received(), st.decoded_count(), st.residual_degree(0))
        );
        assert!(matches!(
            st.ingest(&g, 2, 1.0),
            Err(Error::InvalidIndex { index: 2, count: 2 })
        ));
        let r = st.ingest(&g, 1, 2.0).unwrap();
        assert!(r.complete);
        assert_eq!(r.newly_decoded, 2);
        assert_eq!(st.values().unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn redundant_symbol_is_retired() {
        let g = graph(2, &[&[0], &[1], &[0, 1]]);
        let mut st = DecoderState::new(&g);
        st.ingest(&g, 0, 1.0).unwrap();
        st.ingest(&g, 2, 3.0).unwrap();
        // {0,1} reduced to {1} -> decodes source 1 and retires
        assert!(st.is_complete());
        assert_eq!(st.residual_degree(2), None);
        st.ingest(&g, 1, 2.0).unwrap();
        assert_eq!(st.residual_degree(1), None);
    }

    #[test]
    fn singletons_first_use_m() {
        let mut sets: Vec<Vec<usize>> = (0..5).map(|j| vec![j]).collect();
        sets.push(vec![0, 1, 2]);
        let g = EncodingGraph::from_neighbors(5, sets).unwrap();
        let syms = (0..6).map(|j| (j, g.encode_symbol(j, &[1.0, 2.0, 3.0, 4.0, 5.0])));
        match decode_full(syms, &g).unwrap() {
            DecodeOutcome::Complete { used, .. } => assert_eq!(used, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn batch_equals_incremental() {
        let mut rng = seeded_rng(11);
        let dist = build_degree_distribution(100, 0.1, 0.5).unwrap();
        for _ in 0..20 {
            let g = generate_graph(100, 2.0, &dist, rng.random()).unwrap();
            let b: Vec<f64> = (0..100)
                .map(|_| rng.random_range(-50..=50) as f64)
                .collect();
            let mut order: Vec<usize> = (0..g.m_e()).collect();
            order.shuffle(&mut rng);
            let syms: Vec<(usize, f64)> =
                order.iter().map(|&j| (j, g.encode_symbol(j, &b))).collect();

            let batch = decode_full(syms.iter().copied(), &g).unwrap();

            let mut st = DecoderState::new(&g);
            let mut last = 0;
            let mut incremental = None;
            for &(j, v) in &syms {
                let r = st.ingest(&g, j, v).unwrap();
                assert!(r.decoded_count >= last);
                last = r.decoded_count;
                if r.complete {
                    incremental = Some(DecodeOutcome::Complete {
                        values: st.values().unwrap(),
                        used: st.received(),
                    });
                    break;
                }
            }
            let incremental = incremental.unwrap_or(DecodeOutcome::NeedMore {
                decoded_count: st.decoded_count(),
                received: st.received(),
            });
            assert_eq!(batch, incremental);
            if let DecodeOutcome::Complete { values, .. } = batch {
                assert_eq!(values, b);
            }
        }
    }
}
