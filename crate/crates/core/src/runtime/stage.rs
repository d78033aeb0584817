use std::fs;
use std::path::{Path, PathBuf};

use super::manifest::{JobManifest, WorkerEntry, MANIFEST_FILE};
use super::matfile::save_matrix;
use crate::error::Result;
use crate::ltcode::{build_degree_distribution, encode_matrix, EncodingGraph};
use crate::matrix::Matrix;
use crate::strategies::{mds_encode, plan, Strategy, StrategySpec};

/// Encodes `a` for `spec`, writes one `CMV1` row file per worker plus
/// `manifest.toml` into `out_dir`. Output is a pure function of the inputs.
pub fn encode_and_stage(
    a: &Matrix,
    spec: &StrategySpec,
    seed: u64,
    out_dir: &Path,
) -> Result<JobManifest> {
    spec.validate(a.rows())?;
    let m = a.rows();
    let assignment = plan(spec, m)?;
    let encoded_rows = spec.encoded_rows(m);

    let encoded = match spec.strategy {
        Strategy::Lt { c, delta, .. } => {
            let dist = build_degree_distribution(m, c, delta)?;
            let graph = EncodingGraph::generate(m, encoded_rows, &dist, seed)?;
            encode_matrix(a, &graph)?
        }
        Strategy::Mds { k } => mds_encode(a, spec.p, k, seed)?.0,
        // replicas hold slices of A itself
        Strategy::Replication { .. } => a.clone(),
    };

    fs::create_dir_all(out_dir)?;
    let mut workers = Vec::with_capacity(spec.p);
    for (w, block) in assignment.blocks.iter().enumerate() {
        let file = PathBuf::from(format!("worker_{w}.cmv"));
        let rows = encoded.slice_rows(block.start, block.len());
        save_matrix(&out_dir.join(&file), &rows)?;
        workers.push(WorkerEntry {
            id: w as u32,
            file,
            start_index: block.start,
            count: block.len(),
        });
    }
    let manifest = JobManifest {
        m,
        n: a.cols(),
        seed,
        encoded_rows,
        strategy: spec.strategy,
        workers,
    };
    manifest.validate()?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
