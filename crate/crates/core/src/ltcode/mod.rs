//! LT (Luby transform) coding over matrix rows.
//!
//! Encoded row `j` is the real sum of the source rows in its neighbour set
//! `S_j`; the master decodes `b = A x` from products of encoded rows with a
//! peeling decoder.

mod decoder;
mod distribution;
mod graph;
mod overhead;

pub use decoder::{decode_full, DecodeOutcome, DecoderState, Ingest};
pub use distribution::{build_degree_distribution, DegreeDistribution};
pub use graph::{encode_matrix, generate_graph, EncodingGraph};
pub use overhead::{
    estimate_overhead, estimate_overhead_with, sample_decode_threshold, OverheadReport,
    OverheadTrial,
};

/// Default Robust Soliton constant `c`.
pub const DEFAULT_C: f64 = 0.03;
/// Default Robust Soliton failure bound `delta`.
pub const DEFAULT_DELTA: f64 = 0.5;
