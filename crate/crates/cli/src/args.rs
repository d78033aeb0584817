//! Argument groups shared by several subcommands.

use clap::{Args, ValueEnum};
use ratelessmv::delaysim::DelayParams;
use ratelessmv::ltcode::{DEFAULT_C, DEFAULT_DELTA};
use ratelessmv::strategies::Strategy;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Lt,
    Mds,
    Rep,
    Uncoded,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyKind,
    /// MDS dimension: any k of the p blocks suffice.
    #[arg(long)]
    pub k: Option<usize>,
    /// Replication factor.
    #[arg(long)]
    pub r: Option<usize>,
    /// LT redundancy: encoded rows are about alpha * m.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
}

impl StrategyArgs {
    pub fn resolve(&self) -> CliResult<Strategy> {
        let missing = |flag: &str| {
            CliError::usage(format!("--strategy {:?} requires --{flag}", self.strategy))
        };
        Ok(match self.strategy {
            StrategyKind::Lt => Strategy::Lt {
                alpha: self.alpha,
                c: self.c,
                delta: self.delta,
            },
            StrategyKind::Mds => Strategy::Mds {
                k: self.k.ok_or_else(|| missing("k"))?,
            },
            StrategyKind::Rep => Strategy::Replication {
                r: self.r.ok_or_else(|| missing("r"))?,
            },
            StrategyKind::Uncoded => Strategy::uncoded(),
        })
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct DelayArgs {
    /// Number of workers.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Rate of the exponential setup delay.
    #[arg(long, default_value_t = 0.2)]
    pub mu: f64,
    /// Time per row-vector product.
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
}

impl DelayArgs {
    pub fn params(&self) -> CliResult<DelayParams> {
        Ok(DelayParams::new(self.mu, self.tau, self.p)?)
    }
}

/// The given seed, or a fresh one from OS entropy. Either way it is echoed.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}
