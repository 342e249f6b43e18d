//! Seeded dynamic-state events: per-episode changes to the user count,
//! the association edges, and user positions.

use crate::graph::{GraphEvent, GraphLayout};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Applies one round of dynamic changes at `rate`. At most rate * active
/// users leave or join (bounded by free slots and a capacity ceiling), and
/// the edge set changes by at most rate * |E| edges in total; edges lost
/// to departing users and gained by newcomers count against that same
/// budget, with the remainder spent on rewiring. When `band` is set, new
/// links stay within that many positions in slot order, preserving the
/// locality of banded layouts. Returns the mutated layout.
pub fn apply_dynamic_round(
    layout: &GraphLayout,
    rate: f64,
    plane: (f64, f64),
    task_kb: f64,
    max_active: usize,
    band: Option<usize>,
    seed: u64,
) -> GraphLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = layout.clone();

    let active: Vec<usize> = current.active_vertices().collect();
    let budget_users = (rate * active.len() as f64).round() as usize;
    let budget_edges = (rate * current.edge_count() as f64).round() as usize;
    let mut edges_changed = 0usize;

    // Departures: half the user budget, skipping vertices whose incident
    // edges would blow the edge budget.
    let n_leave_max = (budget_users / 2).min(active.len().saturating_sub(1));
    if n_leave_max > 0 {
        let mut candidates = active.clone();
        candidates.shuffle(&mut rng);
        let mut leaving = Vec::with_capacity(n_leave_max);
        for v in candidates {
            if leaving.len() == n_leave_max {
                break;
            }
            let deg = current.neighbors(v).len();
            if edges_changed + deg <= budget_edges {
                leaving.push(v);
                edges_changed += deg;
            }
        }
        if !leaving.is_empty() {
            leaving.sort_unstable();
            current = current
                .apply_event(&GraphEvent::RemoveUsers {
                    slots: leaving,
                    seed,
                })
                .expect("removal of active slots cannot conflict");
        }
    }

    // Arrivals: the rest of the user budget, each newcomer linking to a
    // few residents while the edge budget lasts.
    let n_join = (budget_users - budget_users / 2)
        .min(current.free_slots(usize::MAX).len())
        .min(max_active.saturating_sub(current.active_count()));
    if n_join > 0 {
        let slots = current.free_slots(n_join);
        let users: Vec<(usize, (f64, f64), f64)> = slots
            .iter()
            .map(|&slot| {
                (
                    slot,
                    (rng.gen_range(0.0..plane.0), rng.gen_range(0.0..plane.1)),
                    task_kb,
                )
            })
            .collect();
        let mut pool: Vec<usize> = current.active_vertices().collect();
        pool.extend_from_slice(&slots);
        pool.sort_unstable();
        let mut edges = BTreeSet::new();
        for &slot in &slots {
            let wanted = rng.gen_range(1..=3usize);
            for _ in 0..wanted {
                if edges_changed + edges.len() >= budget_edges {
                    break;
                }
                let other = pick_partner(&pool, slot, band, &mut rng);
                if other != slot {
                    edges.insert((slot.min(other), slot.max(other)));
                }
            }
        }
        edges_changed += edges.len();
        current = current
            .apply_event(&GraphEvent::AddUsers {
                users,
                edges: edges.into_iter().collect(),
                seed,
            })
            .expect("free slots were just queried");
    }

    // Rewiring with whatever edge budget remains; one rewired pair costs
    // two changes (a removal plus an addition).
    let edges = current.edges();
    let n_rewire = budget_edges.saturating_sub(edges_changed) / 2;
    let n_rewire = n_rewire.min(edges.len());
    if n_rewire > 0 {
        let mut removable = edges.clone();
        removable.shuffle(&mut rng);
        removable.truncate(n_rewire);
        let removed: BTreeSet<(usize, usize)> = removable.iter().copied().collect();
        let survivors: BTreeSet<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|e| !removed.contains(e))
            .collect();
        let active: Vec<usize> = current.active_vertices().collect();
        let mut additions = BTreeSet::new();
        if active.len() >= 2 {
            let mut attempts = 0;
            while additions.len() < n_rewire && attempts < n_rewire * 20 {
                attempts += 1;
                let a = active[rng.gen_range(0..active.len())];
                let b = pick_partner(&active, a, band, &mut rng);
                if a == b {
                    continue;
                }
                let e = (a.min(b), a.max(b));
                if !survivors.contains(&e) && !removed.contains(&e) {
                    additions.insert(e);
                }
            }
        }
        current = current
            .apply_event(&GraphEvent::Rewire {
                add: additions.into_iter().collect(),
                remove: removable,
                seed,
            })
            .expect("rewire endpoints are active");
    }
    current
}

/// Link partner for `slot` among the sorted `pool`: uniform, or within
/// `band` positions of `slot` (with a 10% long-range share) when banded.
fn pick_partner(pool: &[usize], slot: usize, band: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
    match band {
        None => pool[rng.gen_range(0..pool.len())],
        Some(band) => {
            if rng.gen_bool(0.1) {
                return pool[rng.gen_range(0..pool.len())];
            }
            let here = pool.partition_point(|&v| v < slot);
            let lo = here.saturating_sub(band);
            let hi = (here + band).min(pool.len() - 1);
            pool[rng.gen_range(lo..=hi)]
        }
    }
}

/// Redraws every user's position uniformly on the plane.
pub fn shuffle_positions(layout: &GraphLayout, plane: (f64, f64), seed: u64) -> GraphLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas: Vec<(usize, f64, f64)> = layout
        .active_vertices()
        .map(|v| {
            let (x, y) = layout.position(v);
            let nx = rng.gen_range(0.0..plane.0);
            let ny = rng.gen_range(0.0..plane.1);
            (v, nx - x, ny - y)
        })
        .collect();
    layout
        .apply_event(&GraphEvent::Move { deltas, seed })
        .expect("moves touch only active vertices")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout_300() -> GraphLayout {
        crate::harness::build::synthetic_layout(
            300,
            4800,
            100.0,
            (1000.0, 1000.0),
            360,
            42,
        )
        .unwrap()
    }

    #[test]
    fn dynamic_round_respects_change_budgets() {
        let layout = layout_300();
        let next = apply_dynamic_round(&layout, 0.2, (1000.0, 1000.0), 100.0, 360, None, 7);
        next.check_invariants().unwrap();

        // Mask flips: at most 20% of 300.
        let mut flips = 0;
        for i in 0..layout.capacity() {
            if layout.is_active(i) != next.is_active(i) {
                flips += 1;
            }
        }
        assert!(flips <= 60, "{flips} mask flips");

        // Edge changes, churn included: at most 20% of 4800.
        let before: BTreeSet<_> = layout.edges().into_iter().collect();
        let after: BTreeSet<_> = next.edges().into_iter().collect();
        let changed = before.symmetric_difference(&after).count();
        assert!(changed <= 960, "{changed} edge changes");
        assert!(changed > 0, "the round must change something");
    }

    #[test]
    fn dynamic_round_is_deterministic() {
        let layout = layout_300();
        let a = apply_dynamic_round(&layout, 0.2, (1000.0, 1000.0), 100.0, 360, None, 9);
        let b = apply_dynamic_round(&layout, 0.2, (1000.0, 1000.0), 100.0, 360, None, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn shuffle_keeps_structure_moves_positions() {
        let layout = layout_300();
        let next = shuffle_positions(&layout, (1000.0, 1000.0), 3);
        assert_eq!(layout.edge_count(), next.edge_count());
        assert_eq!(layout.active_count(), next.active_count());
        let moved = layout
            .active_vertices()
            .filter(|&v| layout.position(v) != next.position(v))
            .count();
        assert!(moved > 250);
        for v in next.active_vertices() {
            let (x, y) = next.position(v);
            assert!((0.0..1000.0).contains(&x) && (0.0..1000.0).contains(&y));
        }
    }
}
