use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltcode::{build_degree_distribution, EncodingGraph};
use crate::strategies::{Generator, Strategy, StrategySpec};

/// Staged job description, stored as TOML next to the worker row files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobManifest {
    pub m: usize,
    pub n: usize,
    /// Seed of the LT graph or the MDS parity.
    pub seed: u64,
    /// Size of the encoded row space.
    pub encoded_rows: usize,
    pub strategy: Strategy,
    pub workers: Vec<WorkerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerEntry {
    pub id: u32,
    /// Row file, relative to the manifest's directory.
    pub file: PathBuf,
    /// Encoded index of the file's first row.
    pub start_index: usize,
    pub count: usize,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

impl JobManifest {
    pub fn p(&self) -> usize {
        self.workers.len()
    }

    pub fn spec(&self) -> StrategySpec {
        StrategySpec::new(self.strategy, self.p())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("manifest serialization: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: JobManifest = toml::from_str(text).map_err(|e| Error::Format {
            path: MANIFEST_FILE.into(),
            reason: e.to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Format { reason, .. } => Error::Format {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }

    pub fn worker(&self, id: u32) -> Result<&WorkerEntry> {
        self.workers
            .iter()
            .find(|w| w.id == id)
            .ok_or_else(|| Error::Setup(format!("worker {id} is not in the manifest")))
    }

    pub fn validate(&self) -> Result<()> {
        self.spec().validate(self.m)?;
        let expected = self.spec().encoded_rows(self.m);
        if self.encoded_rows != expected {
            return Err(Error::invalid(format!(
                "manifest lists {} encoded rows, strategy implies {expected}",
                self.encoded_rows
            )));
        }
        for (i, w) in self.workers.iter().enumerate() {
            if w.id as usize != i {
                return Err(Error::invalid(format!("worker entry {i} has id {}", w.id)));
            }
            let end = w.start_index + w.count;
            let space = match self.strategy {
                Strategy::Replication { .. } => self.m,
                _ => self.encoded_rows,
            };
            if end > space {
                return Err(Error::invalid(format!(
                    "worker {} block {}..{end} exceeds {space} rows",
                    w.id, w.start_index
                )));
            }
        }
        Ok(())
    }

    /// LT graph the master decodes against.
    pub fn lt_graph(&self) -> Result<EncodingGraph> {
        match self.strategy {
            Strategy::Lt { c, delta, .. } => {
                let dist = build_degree_distribution(self.m, c, delta)?;
                EncodingGraph::generate(self.m, self.encoded_rows, &dist, self.seed)
            }
            _ => Err(Error::invalid("not an LT job")),
        }
    }

    pub fn mds_generator(&self) -> Result<Generator> {
        match self.strategy {
            Strategy::Mds { k } => Generator::gaussian(self.p(), k, self.seed),
            _ => Err(Error::invalid("not an MDS job")),
        }
    }
}

/// Resolves a worker's row file against the manifest location.
pub fn resolve(manifest_path: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(file)
    }
}
