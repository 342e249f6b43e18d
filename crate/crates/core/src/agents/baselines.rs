//! Non-learning baselines: nearest-server greedy and capacity-aware
//! uniform random offloading.

use super::AgentError;
use crate::cost::{distance, OffloadDecision, Scenario};
use crate::graph::GraphLayout;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Assigns every user to the nearest server that still has capacity,
/// visiting users in ascending slot order.
pub fn greedy_offload(
    layout: &GraphLayout,
    scenario: &Scenario,
) -> Result<OffloadDecision, AgentError> {
    let mut remaining: Vec<usize> = scenario.servers.iter().map(|s| s.capacity).collect();
    let mut decision = OffloadDecision::empty(layout.capacity());
    for user in layout.active_vertices() {
        let pos = layout.position(user);
        let nearest = (0..scenario.n_servers())
            .filter(|&k| remaining[k] > 0)
            .min_by(|&a, &b| {
                let da = distance(pos, scenario.servers[a].position);
                let db = distance(pos, scenario.servers[b].position);
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .ok_or(AgentError::AllServersFull)?;
        decision.assign(user, nearest);
        remaining[nearest] -= 1;
    }
    Ok(decision)
}

/// Assigns every user uniformly among the servers that still have
/// capacity.
pub fn random_offload(
    layout: &GraphLayout,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<OffloadDecision, AgentError> {
    let mut remaining: Vec<usize> = scenario.servers.iter().map(|s| s.capacity).collect();
    let mut decision = OffloadDecision::empty(layout.capacity());
    for user in layout.active_vertices() {
        let open: Vec<usize> = (0..scenario.n_servers())
            .filter(|&k| remaining[k] > 0)
            .collect();
        if open.is_empty() {
            return Err(AgentError::AllServersFull);
        }
        let pick = open[rng.gen_range(0..open.len())];
        decision.assign(user, pick);
        remaining[pick] -= 1;
    }
    Ok(decision)
}
