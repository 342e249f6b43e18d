//! Seeded construction of scenarios and user layouts from a config.

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::cost::{
    dbm_to_mw, GnnCostSpec, ResourceCaps, Scenario, ServerSpec, UnitCosts,
};
use crate::data::{load_citation_graph, sample_scenario};
use crate::derive_seed;
use crate::graph::GraphLayout;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Server positions on a grid of cells covering the plane, one server
/// centered per cell.
pub fn server_positions(n_servers: usize, plane: (f64, f64)) -> Vec<(f64, f64)> {
    let cols = (n_servers as f64).sqrt().ceil() as usize;
    let rows = n_servers.div_ceil(cols);
    let cell_w = plane.0 / cols as f64;
    let cell_h = plane.1 / rows as f64;
    (0..n_servers)
        .map(|k| {
            let (col, row) = (k % cols, k / cols);
            (
                cell_w * (col as f64 + 0.5),
                cell_h * (row as f64 + 0.5),
            )
        })
        .collect()
}

/// Capacity levels around the per-server mean: high 5/4, medium 1, low 3/4,
/// each floored, assigned uniformly at random per seed, then topped up on
/// the largest server until the total covers every user.
pub fn capacities(n_users: usize, n_servers: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mean = n_users.div_ceil(n_servers);
    let levels = [
        (mean as f64 * 1.25).floor() as usize,
        mean,
        (mean as f64 * 0.75).floor() as usize,
    ];
    let mut caps: Vec<usize> = (0..n_servers)
        .map(|_| levels[rng.gen_range(0..levels.len())])
        .collect();
    let total: usize = caps.iter().sum();
    if total < n_users {
        let largest = (0..n_servers)
            .max_by_key(|&k| (caps[k], std::cmp::Reverse(k)))
            .unwrap();
        caps[largest] += n_users - total;
    }
    caps
}

/// Builds the edge network for one run. Slot-level radio draws, server
/// rates/powers, and capacity levels all come from streams derived from
/// `seed`, so a (config, seed) pair pins the scenario bit for bit.
pub fn build_scenario(
    config: &ExperimentConfig,
    slots: usize,
    n_users: usize,
    seed: u64,
) -> Result<Scenario, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "scenario"));
    let m = config.n_servers;
    let plane = (config.plane_width, config.plane_height);
    let positions = server_positions(m, plane);
    let caps = capacities(n_users, m, &mut rng);

    let servers: Vec<ServerSpec> = (0..m)
        .map(|k| ServerSpec {
            position: positions[k],
            cpu_rate_kbps: rng.gen_range(config.cpu_rate_min_gbps..=config.cpu_rate_max_gbps)
                * 1.0e6,
            capacity: caps[k],
            tx_power_mw: rng.gen_range(config.server_power_min_mw..=config.server_power_max_mw),
        })
        .collect();

    let user_tx_power_mw: Vec<f64> = (0..slots)
        .map(|_| rng.gen_range(config.user_power_min_mw..=config.user_power_max_mw))
        .collect();
    let bandwidth_user_ap_mhz: Vec<Vec<f64>> = (0..slots)
        .map(|_| {
            (0..m)
                .map(|_| {
                    rng.gen_range(config.bandwidth_user_min_mhz..=config.bandwidth_user_max_mhz)
                })
                .collect()
        })
        .collect();
    let bandwidth_server_mhz: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            (0..m)
                .map(|l| if k == l { 0.0 } else { config.bandwidth_server_mhz })
                .collect()
        })
        .collect();
    // The diagonal is unused; validation only checks off-diagonal entries.
    let mut bandwidth_server_mhz = bandwidth_server_mhz;
    for k in 0..m {
        bandwidth_server_mhz[k][k] = config.bandwidth_server_mhz;
    }

    let b_max1 = if config.b_max1_mhz > 0.0 {
        config.b_max1_mhz
    } else {
        config.bandwidth_user_max_mhz * slots as f64 * m as f64
    };
    let b_max2 = if config.b_max2_mhz > 0.0 {
        config.b_max2_mhz
    } else {
        config.bandwidth_server_mhz * (m * m.saturating_sub(1)) as f64
    };

    let multiplier = config.gnn_model.cost_multiplier();
    let scenario = Scenario {
        plane,
        scope: (config.scope_width, config.scope_height),
        servers,
        user_tx_power_mw,
        bandwidth_user_ap_mhz,
        bandwidth_server_mhz,
        noise_mw: dbm_to_mw(config.noise_dbm),
        ref_gain: config.ref_gain,
        server_gain: config.server_gain,
        unit: UnitCosts {
            upload_mj_per_mb: config.upload_cost_mj_per_mb,
            transfer_mj_per_mb: config.transfer_cost_mj_per_mb,
            agg_pj_per_bit: config.agg_cost_pj_per_bit * multiplier,
            upd_pj_per_bit: config.upd_cost_pj_per_bit * multiplier,
            act_pj_per_bit: config.act_cost_pj_per_bit,
        },
        gnn: GnnCostSpec {
            layers: config.gnn_layers,
            layer_sizes_kb: config.gnn_layer_sizes_kb.clone(),
        },
        caps: ResourceCaps {
            bandwidth_user_total_mhz: b_max1,
            bandwidth_server_total_mhz: b_max2,
            user_power_total_mw: config.p_max1_mw,
            server_power_total_mw: config.p_max2_mw,
        },
        cost_weights: (config.w_time, config.w_energy),
    };
    scenario
        .validate()
        .map_err(|e| HarnessError::Config(format!("scenario from config is invalid: {e}")))?;
    Ok(scenario)
}

/// Builds the user layout for one run: a dataset sample when a dataset is
/// configured, otherwise a synthetic graph in the configured style. Both
/// paths draw positions uniformly on the plane.
pub fn build_layout(
    config: &ExperimentConfig,
    n_users: usize,
    n_assoc: usize,
    slots: usize,
    seed: u64,
) -> Result<GraphLayout, HarnessError> {
    let plane = (config.plane_width, config.plane_height);
    let layout_seed = derive_seed(seed, "layout");
    if let Some(path) = &config.dataset_path {
        let graph = load_citation_graph(path)?;
        return Ok(sample_scenario(
            &graph,
            n_users,
            n_assoc,
            plane,
            slots,
            config.fill_links,
            layout_seed,
        )?);
    }
    match config.graph_style {
        super::config::GraphStyle::Uniform => {
            synthetic_layout(n_users, n_assoc, config.task_kb, plane, slots, layout_seed)
        }
        super::config::GraphStyle::Banded => banded_layout(
            n_users,
            n_assoc,
            config.band_width.max(1),
            config.task_kb,
            plane,
            slots,
            layout_seed,
        ),
    }
}

/// Uniform simple graph over `n_users` vertices with a common task size.
pub fn synthetic_layout(
    n_users: usize,
    n_assoc: usize,
    task_kb: f64,
    plane: (f64, f64),
    slots: usize,
    seed: u64,
) -> Result<GraphLayout, HarnessError> {
    let max = n_users * n_users.saturating_sub(1) / 2;
    let n_edges = n_assoc.min(max);
    let (base, _) = crate::data::gen_synthetic(n_users, n_edges, (1, 1), plane, seed)?;
    let edges = base.edges();
    let positions: Vec<(f64, f64)> = (0..n_users).map(|v| base.position(v)).collect();
    let task: Vec<f64> = vec![task_kb; n_users];
    Ok(GraphLayout::with_capacity(
        slots.max(n_users),
        n_users,
        &edges,
        &positions,
        &task,
    )
    .expect("synthetic layout parts are consistent"))
}

/// Picks a banded edge: mostly short index ranges, ~10% long range.
pub(crate) fn banded_edge(
    n: usize,
    band: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let i = rng.gen_range(0..n);
    let j = if rng.gen_bool(0.1) {
        rng.gen_range(0..n)
    } else {
        let lo = i.saturating_sub(band);
        let hi = (i + band).min(n - 1);
        rng.gen_range(lo..=hi)
    };
    (i != j).then(|| (i.min(j), i.max(j)))
}

/// Locality-structured simple graph: most links connect users whose slot
/// indices are within `band` of each other.
pub fn banded_layout(
    n_users: usize,
    n_assoc: usize,
    band: usize,
    task_kb: f64,
    plane: (f64, f64),
    slots: usize,
    seed: u64,
) -> Result<GraphLayout, HarnessError> {
    let max = n_users * n_users.saturating_sub(1) / 2;
    let target = n_assoc.min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeSet::new();
    let mut attempts = 0usize;
    while edges.len() < target && attempts < target * 200 {
        attempts += 1;
        if let Some(e) = banded_edge(n_users, band, &mut rng) {
            edges.insert(e);
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let positions: Vec<(f64, f64)> = (0..n_users)
        .map(|_| (rng.gen_range(0.0..plane.0), rng.gen_range(0.0..plane.1)))
        .collect();
    let task: Vec<f64> = vec![task_kb; n_users];
    Ok(GraphLayout::with_capacity(
        slots.max(n_users),
        n_users,
        &edges,
        &positions,
        &task,
    )
    .expect("banded layout parts are consistent"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn server_grid_covers_the_plane() {
        let got = server_positions(4, (1000.0, 1000.0));
        assert_eq!(
            got,
            vec![(250.0, 250.0), (750.0, 250.0), (250.0, 750.0), (750.0, 750.0)]
        );
        let five = server_positions(5, (900.0, 600.0));
        assert_eq!(five.len(), 5);
        assert!(five.iter().all(|&(x, y)| x < 900.0 && y < 600.0));
    }

    #[test]
    fn capacity_levels_cover_all_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n_users in [10, 30, 300] {
            for _ in 0..50 {
                let caps = capacities(n_users, 4, &mut rng);
                assert_eq!(caps.len(), 4);
                assert!(caps.iter().sum::<usize>() >= n_users);
                let mean = n_users.div_ceil(4);
                let levels = [
                    (mean as f64 * 1.25).floor() as usize,
                    mean,
                    (mean as f64 * 0.75).floor() as usize,
                ];
                // All but the topped-up server sit exactly on a level.
                let off_level = caps
                    .iter()
                    .filter(|c| !levels.contains(c))
                    .count();
                assert!(off_level <= 1);
            }
        }
    }

    #[test]
    fn scenario_build_is_seed_deterministic() {
        let config = ExperimentConfig::default();
        let a = build_scenario(&config, 36, 30, 7).unwrap();
        let b = build_scenario(&config, 36, 30, 7).unwrap();
        assert_eq!(a, b);
        let c = build_scenario(&config, 36, 30, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_layout_matches_request() {
        let layout = synthetic_layout(20, 50, 800.0, (1000.0, 1000.0), 26, 3).unwrap();
        assert_eq!(layout.active_count(), 20);
        assert_eq!(layout.edge_count(), 50);
        assert_eq!(layout.capacity(), 26);
        assert_eq!(layout.task_kb(5), 800.0);
        layout.check_invariants().unwrap();
    }
}
