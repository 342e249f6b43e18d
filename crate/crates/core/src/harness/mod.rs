//! Config-driven experiment harness behind the `sim` CLI: builds
//! scenarios, runs sweeps, the partition benchmark, training, and the
//! ablation, and writes deterministic CSV files.

mod ablate;
pub mod build;
mod bench;
pub mod config;
pub mod events;
mod sweep;
mod train;

pub use ablate::run_ablation;
pub use bench::run_partition_bench;
pub use config::{ExperimentConfig, LadderPoint, Method};
pub use sweep::run_sweep;
pub use train::run_training;

use crate::agents::AgentError;
use crate::cost::CostError;
use crate::data::DataError;
use crate::env::EnvError;
use crate::partition::PartitionError;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Writes a CSV file in one shot: fixed header, then rows. Data files
/// carry no timestamps, so identical runs produce identical bytes.
pub(crate) fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Resolves the spread-penalty weight: the configured value, or the
/// scenario-derived automatic scale when negative.
pub(crate) fn resolve_zeta(
    config: &ExperimentConfig,
    scenario: &crate::cost::Scenario,
    layout: &crate::graph::GraphLayout,
) -> f64 {
    if config.zeta >= 0.0 {
        config.zeta
    } else {
        crate::env::auto_zeta(scenario, layout)
    }
}

pub(crate) fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Output paths inside one run directory.
pub struct OutPaths {
    pub dir: PathBuf,
}

impl OutPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
        }
    }

    pub fn sweep_csv(&self) -> PathBuf {
        self.dir.join("sweep.csv")
    }

    pub fn bench_csv(&self) -> PathBuf {
        self.dir.join("bench.csv")
    }

    pub fn train_csv(&self) -> PathBuf {
        self.dir.join("train.csv")
    }

    pub fn ablate_csv(&self) -> PathBuf {
        self.dir.join("ablate.csv")
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.dir.join("checkpoint")
    }
}
