//! Simulation core for an edge network serving graph-structured inference tasks.
//!
//! The crate models a plane of mobile users whose task data is correlated
//! (users form a dynamic graph), a set of edge servers that run GNN inference
//! on offloaded tasks, and the communication/computation costs incurred when
//! neighboring users land on different servers. On top of that sit:
//!
//! - [`partition`]: the hierarchical layer-cut partitioner that splits the
//!   user graph into weakly associated subgraphs, plus an iterated s-t
//!   min-cut partitioner used as a runtime baseline;
//! - [`cost`]: link rates, upload/transfer/compute costs and the system
//!   objective, plus a reference dense GCN forward pass;
//! - [`env`]: the multi-agent decision process that offloads users one by
//!   one with per-agent observations and rewards;
//! - [`agents`]: a MADDPG trainer, a single-agent PPO baseline, and the
//!   greedy/random baselines;
//! - [`data`]: citation-graph loading, scenario sampling and synthetic
//!   benchmark graph generation;
//! - [`harness`]: the config-driven experiment runner behind the `sim` CLI.

pub mod agents;
pub mod cost;
pub mod data;
pub mod env;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod partition;

pub use cost::{CostBreakdown, OffloadDecision, Scenario};
pub use graph::{GraphEvent, GraphLayout};
pub use partition::{CutTrace, Partition};

/// Derives a child RNG seed from a base seed and a string tag.
///
/// Every randomized component of a run (layout sampling, network init,
/// exploration, replay sampling, ...) draws from its own stream so that
/// adding one consumer does not perturb the others.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, folded into the base seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}
