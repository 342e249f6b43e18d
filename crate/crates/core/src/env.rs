//! Sequential multi-agent offloading environment: users are visited one by
//! one in ascending slot order; at every step each server-agent emits a
//! two-dimensional action, one server wins the user, collects the negative
//! marginal system cost plus a subgraph-spread penalty, and capacities
//! shrink until every user is placed.

use crate::cost::{
    self, gnn_agg_energy_for_user, gnn_upd_energy, OffloadDecision, Scenario,
};
use crate::graph::GraphLayout;
use crate::partition::Partition;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("no server has remaining capacity")]
    AllServersFull,
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("partition does not cover the layout: {0}")]
    InvalidPartition(String),
    #[error("joint action has {got} agent entries, expected {want}")]
    WrongAgentCount { got: usize, want: usize },
}

/// Per-agent action pair; components are clamped into [0, 1].
/// The first component votes "offload to me", the second votes "not me".
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    actions: Vec<[f64; 2]>,
}

impl JointAction {
    pub fn new(actions: Vec<[f64; 2]>) -> Self {
        let actions = actions
            .into_iter()
            .map(|[a, b]| [a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)])
            .collect();
        Self { actions }
    }

    pub fn agents(&self) -> usize {
        self.actions.len()
    }

    pub fn get(&self, m: usize) -> [f64; 2] {
        self.actions[m]
    }

    /// Flattened in agent order, as fed to centralized critics.
    pub fn flat(&self) -> Vec<f64> {
        self.actions.iter().flatten().copied().collect()
    }
}

/// How the winning server was picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieReport {
    /// Number of capacity-holding agents whose first component won.
    pub yes_candidates: usize,
    /// No agent said yes (or none with capacity); fell back to max first
    /// component among capacity holders.
    pub used_fallback: bool,
    /// The winner was decided by the lowest-index rule.
    pub tie_broken_by_index: bool,
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Per-agent rewards; only the winning agent's entry is nonzero.
    pub rewards: Vec<f64>,
    /// Sum of the per-agent rewards.
    pub global_reward: f64,
    pub done_per_agent: Vec<bool>,
    pub done_global: bool,
    pub user: usize,
    pub chosen_server: usize,
    /// Marginal weighted system cost charged for this assignment.
    pub marginal_cost: f64,
    /// Subgraph-spread penalty charged for this assignment.
    pub penalty: f64,
    pub tie_report: TieReport,
}

/// The environment state across one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    scenario: Scenario,
    layout: GraphLayout,
    partition: Partition,
    /// Active users in ascending slot order.
    pending: Vec<usize>,
    cursor: usize,
    decision: OffloadDecision,
    remaining: Vec<usize>,
    done_agents: Vec<bool>,
    finished: bool,
    /// Spread-penalty weight; zero disables the penalty term.
    zeta: f64,
    /// Per subgraph: users offloaded so far.
    sub_offloaded: Vec<usize>,
    /// Per subgraph x server: whether the server hosts one of its users.
    sub_servers: Vec<Vec<bool>>,
    // Normalization constants frozen at reset.
    max_b_user: f64,
    max_b_server: f64,
}

impl Env {
    /// Fresh episode: nothing offloaded, full capacities, cursor on the
    /// lowest active slot.
    pub fn reset(
        scenario: Scenario,
        layout: GraphLayout,
        partition: Partition,
        zeta: f64,
    ) -> Result<Self, EnvError> {
        partition
            .validate(&layout)
            .map_err(|e| EnvError::InvalidPartition(e.to_string()))?;
        let pending: Vec<usize> = layout.active_vertices().collect();
        let remaining: Vec<usize> = scenario.servers.iter().map(|s| s.capacity).collect();
        let n_sub = partition.len();
        let m = scenario.n_servers();
        let max_b_user = scenario
            .bandwidth_user_ap_mhz
            .iter()
            .flatten()
            .fold(1.0f64, |a, &b| a.max(b));
        let max_b_server = scenario
            .bandwidth_server_mhz
            .iter()
            .flatten()
            .fold(1.0f64, |a, &b| a.max(b));
        Ok(Self {
            decision: OffloadDecision::empty(layout.capacity()),
            done_agents: vec![false; m],
            finished: pending.is_empty(),
            sub_offloaded: vec![0; n_sub],
            sub_servers: vec![vec![false; m]; n_sub],
            scenario,
            layout,
            partition,
            pending,
            cursor: 0,
            remaining,
            zeta,
            max_b_user,
            max_b_server,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn layout(&self) -> &GraphLayout {
        &self.layout
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn decision(&self) -> &OffloadDecision {
        &self.decision
    }

    pub fn n_agents(&self) -> usize {
        self.scenario.n_servers()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn steps_total(&self) -> usize {
        self.pending.len()
    }

    pub fn current_user(&self) -> Option<usize> {
        self.pending.get(self.cursor).copied()
    }

    pub fn remaining_capacity(&self, m: usize) -> usize {
        self.remaining[m]
    }

    /// Length of every per-agent observation for this scenario.
    pub fn obs_dim(scenario: &Scenario) -> usize {
        let n = scenario.user_slots();
        let m = scenario.n_servers();
        4 * n + 1 + n * m
    }

    /// Length of the global state vector for this scenario.
    pub fn state_dim(scenario: &Scenario) -> usize {
        let n = scenario.user_slots();
        let m = scenario.n_servers();
        4 * n + m + n * m + m * m
    }

    fn push_user_block(&self, out: &mut Vec<f64>, visible: impl Fn(usize) -> bool) {
        let n = self.layout.capacity();
        let (pw, ph) = self.scenario.plane;
        for i in 0..n {
            if visible(i) {
                let (x, y) = self.layout.position(i);
                out.push(x / pw.max(1.0));
                out.push(y / ph.max(1.0));
            } else {
                out.push(0.0);
                out.push(0.0);
            }
        }
        for i in 0..n {
            out.push(if visible(i) {
                self.layout.neighbors(i).len() as f64 / 8.0
            } else {
                0.0
            });
        }
        for i in 0..n {
            out.push(if visible(i) {
                self.layout.task_kb(i) / 1500.0
            } else {
                0.0
            });
        }
    }

    /// Local observation of agent `m`: user features zeroed outside the
    /// server's service scope, own remaining capacity, and the user-AP
    /// bandwidth rows of visible users.
    pub fn observe(&self, m: usize) -> Vec<f64> {
        let n = self.layout.capacity();
        let n_servers = self.scenario.n_servers();
        let visible =
            |i: usize| self.layout.is_active(i) && self.scenario.in_scope(m, self.layout.position(i));
        let mut out = Vec::with_capacity(Self::obs_dim(&self.scenario));
        self.push_user_block(&mut out, visible);
        let cap = self.scenario.servers[m].capacity.max(1) as f64;
        out.push(self.remaining[m] as f64 / cap);
        for i in 0..n {
            for k in 0..n_servers {
                out.push(if visible(i) {
                    self.scenario.bandwidth_user_ap_mhz[i][k] / self.max_b_user
                } else {
                    0.0
                });
            }
        }
        out
    }

    /// Global state: every active user's features, all remaining
    /// capacities, and both bandwidth matrices.
    pub fn global_state(&self) -> Vec<f64> {
        let n = self.layout.capacity();
        let n_servers = self.scenario.n_servers();
        let mut out = Vec::with_capacity(Self::state_dim(&self.scenario));
        self.push_user_block(&mut out, |i| self.layout.is_active(i));
        for m in 0..n_servers {
            let cap = self.scenario.servers[m].capacity.max(1) as f64;
            out.push(self.remaining[m] as f64 / cap);
        }
        for i in 0..n {
            for k in 0..n_servers {
                out.push(if self.layout.is_active(i) {
                    self.scenario.bandwidth_user_ap_mhz[i][k] / self.max_b_user
                } else {
                    0.0
                });
            }
        }
        for k in 0..n_servers {
            for l in 0..n_servers {
                out.push(if k == l {
                    0.0
                } else {
                    self.scenario.bandwidth_server_mhz[k][l] / self.max_b_server
                });
            }
        }
        out
    }

    /// Picks the winning server for the current user.
    ///
    /// Each agent says "yes" when its first component is at least its
    /// second. Among capacity-holding yes-sayers the largest margin wins,
    /// ties to the lowest index. Without any such agent, the
    /// capacity-holding agent with the largest first component wins, ties
    /// again to the lowest index.
    pub fn resolve_decision(&self, joint: &JointAction) -> Result<(usize, TieReport), EnvError> {
        let m = self.n_agents();
        if joint.agents() != m {
            return Err(EnvError::WrongAgentCount {
                got: joint.agents(),
                want: m,
            });
        }
        if self.remaining.iter().all(|&r| r == 0) {
            return Err(EnvError::AllServersFull);
        }
        let mut best: Option<(usize, f64)> = None;
        let mut yes_candidates = 0;
        let mut tie = false;
        for k in 0..m {
            if self.remaining[k] == 0 {
                continue;
            }
            let [a1, a2] = joint.get(k);
            if a1 >= a2 {
                yes_candidates += 1;
                let margin = a1 - a2;
                match best {
                    None => best = Some((k, margin)),
                    Some((_, best_margin)) if margin > best_margin => best = Some((k, margin)),
                    Some((_, best_margin)) if margin == best_margin => tie = true,
                    _ => {}
                }
            }
        }
        if let Some((k, _)) = best {
            return Ok((
                k,
                TieReport {
                    yes_candidates,
                    used_fallback: false,
                    tie_broken_by_index: tie,
                },
            ));
        }
        // Nobody volunteered: strongest first component with capacity.
        let mut fallback: Option<(usize, f64)> = None;
        let mut fb_tie = false;
        for k in 0..m {
            if self.remaining[k] == 0 {
                continue;
            }
            let a1 = joint.get(k)[0];
            match fallback {
                None => fallback = Some((k, a1)),
                Some((_, best_a1)) if a1 > best_a1 => fallback = Some((k, a1)),
                Some((_, best_a1)) if a1 == best_a1 => fb_tie = true,
                _ => {}
            }
        }
        let (k, _) = fallback.expect("capacity exists, checked above");
        Ok((
            k,
            TieReport {
                yes_candidates: 0,
                used_fallback: true,
                tie_broken_by_index: fb_tie,
            },
        ))
    }

    /// Spread penalty if `user` goes to `server` now: weight times
    /// (servers hosting the user's subgraph) / (its users offloaded so
    /// far), both counting this assignment.
    pub fn subgraph_penalty(&self, user: usize, server: usize) -> f64 {
        if self.zeta == 0.0 {
            return 0.0;
        }
        let c = self
            .partition
            .subgraph_of(user)
            .expect("partition covers active users");
        let n_c = self.sub_offloaded[c] + 1;
        let mut n_s = self.sub_servers[c].iter().filter(|&&h| h).count();
        if !self.sub_servers[c][server] {
            n_s += 1;
        }
        self.zeta * n_s as f64 / n_c as f64
    }

    /// Weighted marginal system cost of assigning `user` to `server`:
    /// its upload and compute costs, the new two-way transfer traffic with
    /// already-assigned neighbors, its aggregation energy share, and (on
    /// the episode's final assignment) the decision-independent update
    /// energy. Summed over an episode this telescopes exactly to the
    /// weighted total system cost of the final decision.
    pub fn marginal_cost(&self, user: usize, server: usize) -> f64 {
        let (w_t, w_i) = self.scenario.cost_weights;
        let (t_up, e_up) = cost::upload_cost(&self.scenario, &self.layout, user, server, true);
        let t_comp = cost::compute_time(&self.scenario, server, self.layout.task_kb(user), true)
            .expect("scenario validated at reset");
        let mut t_tr = 0.0;
        let mut e_tr = 0.0;
        for &j in self.layout.neighbors(user) {
            if let Some(r) = self.decision.server_of(j) {
                if r != server {
                    let both_ways = (self.layout.task_kb(user) + self.layout.task_kb(j))
                        / cost::KILOBITS_PER_MEGABIT;
                    let (k, l) = (server.min(r), server.max(r));
                    t_tr += both_ways / cost::server_rate(&self.scenario, k, l);
                    e_tr += both_ways * self.scenario.unit.transfer_mj_per_mb;
                }
            }
        }
        let deg = self.layout.neighbors(user).len();
        let mut energy = e_up + e_tr + gnn_agg_energy_for_user(&self.scenario, deg);
        if self.cursor + 1 == self.pending.len() {
            energy += gnn_upd_energy(&self.scenario);
        }
        w_t * (t_up + t_comp + t_tr) + w_i * energy
    }

    /// Resolves the joint action, charges the winner, advances the cursor.
    pub fn step(&mut self, joint: &JointAction) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        let (server, tie_report) = self.resolve_decision(joint)?;
        self.apply_assignment(server, Some(tie_report))
    }

    /// Assigns the current user to an explicitly chosen server (used by
    /// the single-agent baseline). The server must have capacity.
    pub fn step_direct(&mut self, server: usize) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        if self.remaining[server] == 0 {
            return Err(EnvError::AllServersFull);
        }
        self.apply_assignment(server, None)
    }

    fn apply_assignment(
        &mut self,
        server: usize,
        tie_report: Option<TieReport>,
    ) -> Result<StepOutcome, EnvError> {
        let user = self.pending[self.cursor];
        let penalty = self.subgraph_penalty(user, server);
        let marginal = self.marginal_cost(user, server);

        self.decision.assign(user, server);
        self.remaining[server] -= 1;
        let c = self.partition.subgraph_of(user).unwrap();
        self.sub_offloaded[c] += 1;
        self.sub_servers[c][server] = true;
        self.cursor += 1;
        self.finished = self.cursor == self.pending.len();

        if self.remaining[server] == 0 {
            self.done_agents[server] = true;
        }
        if self.finished {
            self.done_agents.fill(true);
        }

        let mut rewards = vec![0.0; self.n_agents()];
        rewards[server] = -(marginal + penalty);
        let global_reward = rewards.iter().sum();
        Ok(StepOutcome {
            rewards,
            global_reward,
            done_per_agent: self.done_agents.clone(),
            done_global: self.finished,
            user,
            chosen_server: server,
            marginal_cost: marginal,
            penalty,
            tie_report: tie_report.unwrap_or(TieReport {
                yes_candidates: 0,
                used_fallback: false,
                tie_broken_by_index: false,
            }),
        })
    }
}

/// Half the mean per-user cost scale under a scatter-everything decision:
/// nearest-server upload and compute time, upload energy, and one transfer
/// per neighbor edge. Used as the default spread-penalty weight.
pub fn auto_zeta(scenario: &Scenario, layout: &GraphLayout) -> f64 {
    let active: Vec<usize> = layout.active_vertices().collect();
    if active.is_empty() {
        return 0.0;
    }
    let (w_t, w_i) = scenario.cost_weights;
    let mean_rate_kbps = scenario
        .servers
        .iter()
        .map(|s| s.cpu_rate_kbps)
        .sum::<f64>()
        / scenario.n_servers() as f64;
    let mut total = 0.0;
    for &i in &active {
        let x_kb = layout.task_kb(i);
        let x_mb = x_kb / cost::KILOBITS_PER_MEGABIT;
        let nearest = (0..scenario.n_servers())
            .min_by(|&a, &b| {
                let da = cost::distance(layout.position(i), scenario.servers[a].position);
                let db = cost::distance(layout.position(i), scenario.servers[b].position);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let d = cost::distance(layout.position(i), scenario.servers[nearest].position);
        let rate = cost::uplink_rate(scenario, i, nearest, d);
        let t_up = if x_mb == 0.0 { 0.0 } else { x_mb / rate };
        let t_comp = x_kb / mean_rate_kbps;
        let e_up = x_mb * scenario.unit.upload_mj_per_mb;
        let e_tr = layout.neighbors(i).len() as f64 * x_mb * scenario.unit.transfer_mj_per_mb;
        total += w_t * (t_up + t_comp) + w_i * (e_up + e_tr);
    }
    0.5 * total / active.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::tests::small_scenario;
    use crate::partition::hicut;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn scenario_and_layout() -> (Scenario, GraphLayout, Partition) {
        let sc = small_scenario(6);
        let layout = GraphLayout::new(
            6,
            &[(0, 1), (0, 2), (0, 5), (1, 3), (2, 4)],
            &[
                (200.0, 200.0),
                (300.0, 300.0),
                (700.0, 200.0),
                (800.0, 300.0),
                (250.0, 250.0),
                (750.0, 250.0),
            ],
            &[100.0; 6],
        )
        .unwrap();
        let (partition, _) = hicut(&layout).unwrap();
        (sc, layout, partition)
    }

    #[test]
    fn reset_starts_clean_and_is_reproducible() {
        let (sc, layout, partition) = scenario_and_layout();
        let env = Env::reset(sc.clone(), layout.clone(), partition.clone(), 1.0).unwrap();
        assert_eq!(env.decision().assigned_count(), 0);
        assert_eq!(env.current_user(), Some(0));
        let env2 = Env::reset(sc, layout, partition, 1.0).unwrap();
        assert_eq!(env, env2);
    }

    #[test]
    fn observe_zeroes_users_outside_scope() {
        let (sc, layout, partition) = scenario_and_layout();
        let env = Env::reset(sc.clone(), layout, partition, 1.0).unwrap();
        // User 2 at (700, 200) is inside server 1's scope, outside server 0's.
        assert!(sc.in_scope(1, (700.0, 200.0)));
        assert!(!sc.in_scope(0, (700.0, 200.0)));
        let obs0 = env.observe(0);
        let n = env.layout().capacity();
        // Position entries of user 2 in agent 0's observation are zero.
        assert_eq!(obs0[4], 0.0);
        assert_eq!(obs0[5], 0.0);
        // Degree and task size blocks zero too.
        assert_eq!(obs0[2 * n + 2], 0.0);
        assert_eq!(obs0[3 * n + 2], 0.0);
        // And nonzero in agent 1's observation.
        let obs1 = env.observe(1);
        assert!(obs1[4] != 0.0);
        assert!(obs1[3 * n + 2] != 0.0);
    }

    #[test]
    fn disjoint_scopes_see_disjoint_users() {
        let (sc, layout, partition) = scenario_and_layout();
        let env = Env::reset(sc, layout, partition, 1.0).unwrap();
        let obs0 = env.observe(0);
        let obs1 = env.observe(1);
        let n = env.layout().capacity();
        // Own-capacity entry differs by agent; compare only user blocks.
        let user_block = 4 * n;
        for i in 0..user_block {
            assert!(
                obs0[i] == 0.0 || obs1[i] == 0.0,
                "entry {i} visible to both disjoint scopes"
            );
        }
    }

    #[test]
    fn observation_length_is_constant_over_an_episode() {
        let (sc, layout, partition) = scenario_and_layout();
        let want = Env::obs_dim(&sc);
        let mut env = Env::reset(sc, layout, partition, 1.0).unwrap();
        while !env.is_finished() {
            for m in 0..env.n_agents() {
                assert_eq!(env.observe(m).len(), want);
            }
            env.step(&JointAction::new(vec![[1.0, 0.0], [0.0, 1.0]]))
                .unwrap();
        }
    }

    #[test]
    fn resolve_unique_yes_wins() {
        let (sc, layout, partition) = scenario_and_layout();
        let env = Env::reset(sc, layout, partition, 1.0).unwrap();
        let joint = JointAction::new(vec![[0.1, 0.9], [0.9, 0.1]]);
        let (server, report) = env.resolve_decision(&joint).unwrap();
        assert_eq!(server, 1);
        assert!(!report.used_fallback);
    }

    #[test]
    fn resolve_all_equal_falls_to_lowest_index() {
        let (sc, layout, partition) = scenario_and_layout();
        let env = Env::reset(sc, layout, partition, 1.0).unwrap();
        let joint = JointAction::new(vec![[0.5, 0.5], [0.5, 0.5]]);
        let (server, report) = env.resolve_decision(&joint).unwrap();
        assert_eq!(server, 0);
        assert!(report.tie_broken_by_index);
    }

    #[test]
    fn resolve_always_picks_a_server_with_capacity() {
        let (mut sc, layout, partition) = scenario_and_layout();
        sc.servers[0].capacity = 2;
        sc.servers[1].capacity = 5;
        let mut env = Env::reset(sc, layout, partition, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        let mut checked = 0;
        'outer: loop {
            for _ in 0..10_000 {
                let joint = JointAction::new(vec![
                    [rng.gen::<f64>(), rng.gen::<f64>()],
                    [rng.gen::<f64>(), rng.gen::<f64>()],
                ]);
                let (server, _) = env.resolve_decision(&joint).unwrap();
                assert!(env.remaining_capacity(server) >= 1);
                checked += 1;
                if checked % 1000 == 0 {
                    // Occasionally commit a step so capacities move.
                    if env.step(&joint).unwrap().done_global {
                        break 'outer;
                    }
                }
            }
            break;
        }
        assert!(checked >= 5000);
    }

    #[test]
    fn subgraph_penalty_counts() {
        let (sc, layout, _) = scenario_and_layout();
        // One subgraph containing all six users makes counting easy.
        let partition = Partition::single(&layout);
        let zeta = 2.0;
        let mut env = Env::reset(sc, layout, partition, zeta).unwrap();

        // First user of a subgraph: zeta * 1/1.
        assert_eq!(env.subgraph_penalty(0, 0), zeta);

        // All six on one server: penalty at the last assignment is zeta/6.
        for step in 0..5 {
            let _ = step;
            env.step_direct(0).unwrap();
        }
        assert!((env.subgraph_penalty(5, 0) - zeta / 6.0).abs() < 1e-12);

        // Spread over three servers: 3/6 at the last assignment.
        let (mut sc3, layout3, _) = scenario_and_layout();
        sc3.servers.push(crate::cost::ServerSpec {
            position: (500.0, 400.0),
            cpu_rate_kbps: 3.0e6,
            capacity: 100,
            tx_power_mw: 11.0,
        });
        sc3.bandwidth_user_ap_mhz = vec![vec![30.0; 3]; 6];
        sc3.bandwidth_server_mhz = vec![vec![100.0; 3]; 3];
        sc3.caps.bandwidth_user_total_mhz = 30.0 * 3.0 * 6.0;
        sc3.caps.bandwidth_server_total_mhz = 600.0;
        let partition3 = Partition::single(&layout3);
        let mut env3 = Env::reset(sc3, layout3, partition3, zeta).unwrap();
        env3.step_direct(0).unwrap();
        env3.step_direct(0).unwrap();
        env3.step_direct(1).unwrap();
        env3.step_direct(1).unwrap();
        env3.step_direct(2).unwrap();
        assert!((env3.subgraph_penalty(5, 2) - zeta * 3.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn episode_runs_exactly_k_steps_and_rewards_sum() {
        let (sc, layout, partition) = scenario_and_layout();
        let k = layout.active_count();
        let mut env = Env::reset(sc, layout, partition, 1.0).unwrap();
        let joint = JointAction::new(vec![[0.8, 0.2], [0.3, 0.7]]);
        let mut steps = 0;
        loop {
            let out = env.step(&joint).unwrap();
            steps += 1;
            let sum: f64 = out.rewards.iter().sum();
            assert_eq!(out.global_reward, sum);
            if out.done_global {
                break;
            }
        }
        assert_eq!(steps, k);
        assert!(matches!(
            env.step(&joint),
            Err(EnvError::EpisodeFinished)
        ));
    }

    #[test]
    fn done_flag_raises_when_a_server_fills() {
        let (mut sc, layout, partition) = scenario_and_layout();
        sc.servers[0].capacity = 1;
        sc.servers[1].capacity = 10;
        let mut env = Env::reset(sc, layout, partition, 0.0).unwrap();
        let out = env.step_direct(0).unwrap();
        assert!(out.done_per_agent[0]);
        assert!(!out.done_per_agent[1]);
    }

    #[test]
    fn marginal_costs_telescope_to_system_cost() {
        let (sc, layout, partition) = scenario_and_layout();
        let mut env = Env::reset(sc.clone(), layout.clone(), partition, 0.0).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let mut marginal_sum = 0.0;
        while !env.is_finished() {
            let server = loop {
                let s = rng.gen_range(0..2);
                if env.remaining_capacity(s) > 0 {
                    break s;
                }
            };
            let out = env.step_direct(server).unwrap();
            marginal_sum += out.marginal_cost;
        }
        let total = cost::system_cost(&sc, &layout, env.decision()).unwrap();
        let rel = (marginal_sum - total.cost).abs() / total.cost.max(1e-30);
        assert!(rel < 1e-6, "telescoping relative error {rel}");
    }

    #[test]
    fn capacity_never_negative_and_transitions_deterministic() {
        let (mut sc, layout, partition) = scenario_and_layout();
        sc.servers[0].capacity = 3;
        sc.servers[1].capacity = 3;
        let joint = JointAction::new(vec![[0.9, 0.0], [0.2, 0.1]]);
        let mut env_a = Env::reset(sc.clone(), layout.clone(), partition.clone(), 1.0).unwrap();
        let mut env_b = Env::reset(sc, layout, partition, 1.0).unwrap();
        while !env_a.is_finished() {
            let out_a = env_a.step(&joint).unwrap();
            let out_b = env_b.step(&joint).unwrap();
            assert_eq!(out_a, out_b);
            for m in 0..env_a.n_agents() {
                assert!(env_a.remaining_capacity(m) <= 100);
            }
        }
        assert_eq!(env_a, env_b);
    }
}
