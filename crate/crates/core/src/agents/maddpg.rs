//! Multi-agent deep deterministic policy gradient trainer: decentralized
//! sigmoid actors over local observations, centralized critics over the
//! global state plus every agent's action, target-network bootstrapping,
//! and soft target updates.

use super::replay::{ReplayBuffer, Transition};
use super::AgentError;
use crate::env::{Env, JointAction};
use crate::nn::{adam_step, soft_update, AdamState, Gradients, Mlp, OutputActivation};
use crate::partition::Partition;
use crate::{cost::Scenario, derive_seed, graph::GraphLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct MaddpgConfig {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub exploration_rate: f64,
    /// Rewards are multiplied by this before storage so critic targets
    /// stay O(1) regardless of the scenario's cost scale.
    pub reward_scale: f64,
    /// Train every this many environment steps once the buffer is warm.
    pub train_interval: usize,
    /// Environment steps driven by uniform random actions (and without
    /// optimization) before the policies take over; prefills the replay
    /// buffer with diverse transitions.
    pub warmup_steps: usize,
    /// Train every critic on the shared global reward (cooperative mode).
    /// With per-agent rewards instead, losing agents see zero reward and
    /// learn to never volunteer, collapsing to the tie-break fallback.
    pub shared_reward: bool,
}

impl Default for MaddpgConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            gamma: 0.99,
            tau: 0.01,
            batch_size: 256,
            buffer_capacity: 100_000,
            exploration_rate: 0.1,
            reward_scale: 0.02,
            train_interval: 1,
            warmup_steps: 256,
            shared_reward: true,
        }
    }
}

/// One agent's four networks and their optimizer states.
#[derive(Debug, Clone)]
pub struct MaddpgAgent {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
}

impl MaddpgAgent {
    fn new(obs_dim: usize, critic_in: usize, config: &MaddpgConfig, seed: u64) -> Self {
        let mut actor_dims = vec![obs_dim];
        actor_dims.extend_from_slice(&config.hidden);
        actor_dims.push(2);
        let mut critic_dims = vec![critic_in];
        critic_dims.extend_from_slice(&config.hidden);
        critic_dims.push(1);
        let actor = Mlp::new(&actor_dims, OutputActivation::Sigmoid, derive_seed(seed, "actor"));
        let critic = Mlp::new(
            &critic_dims,
            OutputActivation::Identity,
            derive_seed(seed, "critic"),
        );
        Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: AdamState::new(&actor, config.actor_lr),
            critic_opt: AdamState::new(&critic, config.critic_lr),
            actor,
            critic,
        }
    }

    /// Actor output for an observation, optionally replaced by a uniform
    /// random pair with probability equal to the exploration rate.
    pub fn select_action(
        &self,
        observation: &[f64],
        explore: bool,
        exploration_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<[f64; 2], AgentError> {
        if explore && rng.gen::<f64>() < exploration_rate {
            return Ok([rng.gen::<f64>(), rng.gen::<f64>()]);
        }
        let cache = self.actor.forward(observation)?;
        let out = cache.output();
        Ok([out[0].clamp(0.0, 1.0), out[1].clamp(0.0, 1.0)])
    }
}

/// The full set of agents plus the shared replay buffer.
#[derive(Debug, Clone)]
pub struct MaddpgTeam {
    pub config: MaddpgConfig,
    agents: Vec<MaddpgAgent>,
    buffer: ReplayBuffer,
    state_dim: usize,
    obs_dim: usize,
    rng: ChaCha8Rng,
    env_steps: u64,
}

/// Per-agent losses from one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMetrics {
    pub critic_loss: Vec<f64>,
    pub actor_objective: Vec<f64>,
}

impl MaddpgTeam {
    pub fn new(
        state_dim: usize,
        obs_dim: usize,
        n_agents: usize,
        config: MaddpgConfig,
        seed: u64,
    ) -> Self {
        let critic_in = state_dim + 2 * n_agents;
        let agents = (0..n_agents)
            .map(|m| {
                MaddpgAgent::new(
                    obs_dim,
                    critic_in,
                    &config,
                    derive_seed(seed, &format!("agent{m}")),
                )
            })
            .collect();
        Self {
            buffer: ReplayBuffer::new(config.buffer_capacity, derive_seed(seed, "replay")),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, "exploration")),
            agents,
            config,
            state_dim,
            obs_dim,
            env_steps: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn agent(&self, m: usize) -> &MaddpgAgent {
        &self.agents[m]
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn store(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// Whether the team is still in its random warmup phase.
    pub fn in_warmup(&self) -> bool {
        (self.env_steps as usize) < self.config.warmup_steps
    }

    /// Joint action from all actors on their local observations. During
    /// the warmup phase of training, actions are uniform random pairs.
    pub fn act(&mut self, observations: &[Vec<f64>], explore: bool) -> Result<JointAction, AgentError> {
        if explore && self.in_warmup() {
            let actions = (0..self.agents.len())
                .map(|_| [self.rng.gen::<f64>(), self.rng.gen::<f64>()])
                .collect();
            return Ok(JointAction::new(actions));
        }
        let mut actions = Vec::with_capacity(self.agents.len());
        for (agent, obs) in self.agents.iter().zip(observations) {
            actions.push(agent.select_action(
                obs,
                explore,
                self.config.exploration_rate,
                &mut self.rng,
            )?);
        }
        Ok(JointAction::new(actions))
    }

    fn critic_input(state: &[f64], actions: &[[f64; 2]]) -> Vec<f64> {
        let mut v = Vec::with_capacity(state.len() + 2 * actions.len());
        v.extend_from_slice(state);
        for a in actions {
            v.extend_from_slice(a);
        }
        v
    }

    /// One optimization step for every agent: critic regression toward the
    /// bootstrapped target, deterministic policy-gradient actor ascent
    /// through the critic, then soft target updates.
    pub fn train_step(&mut self) -> Result<TrainMetrics, AgentError> {
        let batch = self.config.batch_size;
        if self.buffer.len() < batch {
            return Err(AgentError::InsufficientBuffer {
                have: self.buffer.len(),
                need: batch,
            });
        }
        let n_agents = self.agents.len();
        let gamma = self.config.gamma;
        let mut critic_losses = Vec::with_capacity(n_agents);
        let mut actor_objectives = Vec::with_capacity(n_agents);

        for m in 0..n_agents {
            let indices = self.buffer.sample_indices(batch);

            // Critic: target value from the target actors and target critic.
            let mut critic_grads = Gradients::zeros_like(&self.agents[m].critic);
            let mut loss_sum = 0.0;
            for &idx in &indices {
                let t = self.buffer.get(idx);
                let mut next_actions = Vec::with_capacity(n_agents);
                for q in 0..n_agents {
                    let out = self.agents[q].actor_target.forward(&t.next_obs[q])?;
                    next_actions.push([out.output()[0], out.output()[1]]);
                }
                let next_q = self.agents[m]
                    .critic_target
                    .forward(&Self::critic_input(&t.next_state, &next_actions))?
                    .output()[0];
                let not_done = if t.done[m] { 0.0 } else { 1.0 };
                let target = t.rewards[m] + not_done * gamma * next_q;

                let cache = self.agents[m]
                    .critic
                    .forward(&Self::critic_input(&t.state, &t.actions))?;
                let q_val = cache.output()[0];
                let err = q_val - target;
                loss_sum += err * err;
                self.agents[m].critic.backward_acc(
                    &cache,
                    &[2.0 * err / batch as f64],
                    &mut critic_grads,
                )?;
            }
            let agent = &mut self.agents[m];
            adam_step(&mut agent.critic, &critic_grads, &mut agent.critic_opt);
            critic_losses.push(loss_sum / batch as f64);

            // Actor: ascend Q_m with this agent's action replaced by its
            // current policy output, other actions from the buffer.
            let mut actor_grads = Gradients::zeros_like(&self.agents[m].actor);
            let mut objective_sum = 0.0;
            for &idx in &indices {
                let t = self.buffer.get(idx);
                let actor_cache = self.agents[m].actor.forward(&t.obs[m])?;
                let my_action = [actor_cache.output()[0], actor_cache.output()[1]];
                let mut actions = t.actions.clone();
                actions[m] = my_action;
                let critic_cache = self.agents[m]
                    .critic
                    .forward(&Self::critic_input(&t.state, &actions))?;
                objective_sum += critic_cache.output()[0];

                // dQ/d(input) -> the two slots of agent m's action.
                let critic_input_grads = self.agents[m]
                    .critic
                    .backward(&critic_cache, &[1.0])?
                    .d_input;
                let base = self.state_dim + 2 * m;
                let d_action = [critic_input_grads[base], critic_input_grads[base + 1]];
                // Ascent: accumulate the negated gradient, scaled per batch.
                let d_out = [
                    -d_action[0] / batch as f64,
                    -d_action[1] / batch as f64,
                ];
                self.agents[m]
                    .actor
                    .backward_acc(&actor_cache, &d_out, &mut actor_grads)?;
            }
            let agent = &mut self.agents[m];
            adam_step(&mut agent.actor, &actor_grads, &mut agent.actor_opt);
            actor_objectives.push(objective_sum / batch as f64);
        }

        let tau = self.config.tau;
        for agent in &mut self.agents {
            soft_update(&mut agent.actor_target, &agent.actor, tau)?;
            soft_update(&mut agent.critic_target, &agent.critic, tau)?;
        }
        Ok(TrainMetrics {
            critic_loss: critic_losses,
            actor_objective: actor_objectives,
        })
    }

    /// Fixed directory layout: a meta file plus four parameter files per
    /// agent.
    pub fn save(&self, dir: &Path) -> Result<(), AgentError> {
        std::fs::create_dir_all(dir)?;
        let mut meta = std::io::BufWriter::new(std::fs::File::create(dir.join("meta.txt"))?);
        writeln!(meta, "n_agents {}", self.agents.len())?;
        writeln!(meta, "state_dim {}", self.state_dim)?;
        writeln!(meta, "obs_dim {}", self.obs_dim)?;
        let hidden: Vec<String> = self.config.hidden.iter().map(|h| h.to_string()).collect();
        writeln!(meta, "hidden {}", hidden.join(","))?;
        drop(meta);
        for (m, agent) in self.agents.iter().enumerate() {
            agent.actor.save(&dir.join(format!("agent{m}_actor.bin")))?;
            agent
                .actor_target
                .save(&dir.join(format!("agent{m}_actor_target.bin")))?;
            agent.critic.save(&dir.join(format!("agent{m}_critic.bin")))?;
            agent
                .critic_target
                .save(&dir.join(format!("agent{m}_critic_target.bin")))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path, config: MaddpgConfig, seed: u64) -> Result<Self, AgentError> {
        let meta = std::fs::File::open(dir.join("meta.txt"))
            .map_err(|e| AgentError::Checkpoint(format!("missing meta.txt in {dir:?}: {e}")))?;
        let mut n_agents = None;
        let mut state_dim = None;
        let mut obs_dim = None;
        for line in std::io::BufReader::new(meta).lines() {
            let line = line?;
            let mut it = line.split_whitespace();
            match (it.next(), it.next()) {
                (Some("n_agents"), Some(v)) => n_agents = v.parse().ok(),
                (Some("state_dim"), Some(v)) => state_dim = v.parse().ok(),
                (Some("obs_dim"), Some(v)) => obs_dim = v.parse().ok(),
                _ => {}
            }
        }
        let (n_agents, state_dim, obs_dim) = match (n_agents, state_dim, obs_dim) {
            (Some(a), Some(s), Some(o)) => (a, s, o),
            _ => {
                return Err(AgentError::Checkpoint(
                    "meta.txt is missing n_agents/state_dim/obs_dim".into(),
                ))
            }
        };
        let mut team = Self::new(state_dim, obs_dim, n_agents, config, seed);
        for (m, agent) in team.agents.iter_mut().enumerate() {
            agent.actor = Mlp::load(
                &dir.join(format!("agent{m}_actor.bin")),
                OutputActivation::Sigmoid,
            )?;
            agent.actor_target = Mlp::load(
                &dir.join(format!("agent{m}_actor_target.bin")),
                OutputActivation::Sigmoid,
            )?;
            agent.critic = Mlp::load(
                &dir.join(format!("agent{m}_critic.bin")),
                OutputActivation::Identity,
            )?;
            agent.critic_target = Mlp::load(
                &dir.join(format!("agent{m}_critic_target.bin")),
                OutputActivation::Identity,
            )?;
            agent.actor_opt = AdamState::new(&agent.actor, team.config.actor_lr);
            agent.critic_opt = AdamState::new(&agent.critic, team.config.critic_lr);
        }
        Ok(team)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Result of driving one episode to completion.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Total unscaled global reward.
    pub reward: f64,
    pub decision: crate::cost::OffloadDecision,
    pub steps: usize,
    /// Mean critic loss over the training updates of this episode, zero
    /// when none ran.
    pub critic_loss_mean: f64,
}

/// Runs the environment to completion. In training mode every step is
/// stored and, once the buffer is warm, optimized at the configured
/// interval.
pub fn run_episode(
    env: &mut Env,
    team: &mut MaddpgTeam,
    mode: Mode,
) -> Result<EpisodeResult, AgentError> {
    let n = team.n_agents();
    let mut state = env.global_state();
    let mut obs: Vec<Vec<f64>> = (0..n).map(|m| env.observe(m)).collect();
    let mut total_reward = 0.0;
    let mut steps = 0;
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;

    while !env.is_finished() {
        let explore = mode == Mode::Train;
        let joint = team.act(&obs, explore)?;
        let outcome = env.step(&joint)?;
        total_reward += outcome.global_reward;
        steps += 1;

        let next_state = env.global_state();
        let next_obs: Vec<Vec<f64>> = (0..n).map(|m| env.observe(m)).collect();

        if mode == Mode::Train {
            let scale = team.config.reward_scale;
            let stored_rewards: Vec<f64> = if team.config.shared_reward {
                vec![outcome.global_reward * scale; n]
            } else {
                outcome.rewards.iter().map(|r| r * scale).collect()
            };
            team.store(Transition {
                state: state.clone(),
                obs: obs.clone(),
                actions: (0..n).map(|m| joint.get(m)).collect(),
                rewards: stored_rewards,
                next_state: next_state.clone(),
                next_obs: next_obs.clone(),
                done: outcome.done_per_agent.clone(),
            });
            team.env_steps += 1;
            if !team.in_warmup()
                && team.buffer.len() >= team.config.batch_size
                && team.env_steps % team.config.train_interval as u64 == 0
            {
                let metrics = team.train_step()?;
                loss_sum += metrics.critic_loss.iter().sum::<f64>()
                    / metrics.critic_loss.len() as f64;
                loss_count += 1;
            }
        }

        state = next_state;
        obs = next_obs;
    }
    Ok(EpisodeResult {
        reward: total_reward,
        decision: env.decision().clone(),
        steps,
        critic_loss_mean: if loss_count > 0 {
            loss_sum / loss_count as f64
        } else {
            0.0
        },
    })
}

/// Environment for the ablation arm: same trainer, no spread penalty, one
/// trivial subgraph spanning the layout.
pub fn drl_only_env(
    scenario: Scenario,
    layout: GraphLayout,
) -> Result<Env, crate::env::EnvError> {
    let partition = Partition::single(&layout);
    Env::reset(scenario, layout, partition, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::tests::small_scenario;
    use crate::env::Env;
    use crate::partition::hicut;

    fn tiny_config() -> MaddpgConfig {
        MaddpgConfig {
            hidden: vec![16, 16],
            batch_size: 8,
            buffer_capacity: 500,
            train_interval: 1,
            warmup_steps: 0,
            shared_reward: false,
            ..MaddpgConfig::default()
        }
    }

    fn env_fixture() -> Env {
        let sc = small_scenario(6);
        let layout = crate::graph::GraphLayout::new(
            6,
            &[(0, 1), (0, 2), (2, 3), (4, 5)],
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
        Env::reset(sc, layout, partition, 1.0).unwrap()
    }

    #[test]
    fn select_action_deterministic_without_exploration() {
        let env = env_fixture();
        let mut team = MaddpgTeam::new(
            Env::state_dim(env.scenario()),
            Env::obs_dim(env.scenario()),
            2,
            tiny_config(),
            3,
        );
        let obs: Vec<Vec<f64>> = (0..2).map(|m| env.observe(m)).collect();
        let a = team.act(&obs, false).unwrap();
        let b = team.act(&obs, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn select_action_components_stay_in_unit_interval() {
        let env = env_fixture();
        let mut team = MaddpgTeam::new(
            Env::state_dim(env.scenario()),
            Env::obs_dim(env.scenario()),
            2,
            tiny_config(),
            5,
        );
        let obs: Vec<Vec<f64>> = (0..2).map(|m| env.observe(m)).collect();
        for _ in 0..200 {
            let joint = team.act(&obs, true).unwrap();
            for m in 0..2 {
                let [a1, a2] = joint.get(m);
                assert!((0.0..=1.0).contains(&a1));
                assert!((0.0..=1.0).contains(&a2));
            }
        }
    }

    #[test]
    fn full_exploration_rate_looks_uniform() {
        // With exploration rate 1 every action is a uniform pair; bucket
        // frequencies over [0,1] should be flat to a few percent.
        let env = env_fixture();
        let mut config = tiny_config();
        config.exploration_rate = 1.0;
        let mut team = MaddpgTeam::new(
            Env::state_dim(env.scenario()),
            Env::obs_dim(env.scenario()),
            2,
            config,
            11,
        );
        let obs: Vec<Vec<f64>> = (0..2).map(|m| env.observe(m)).collect();
        let mut buckets = [0usize; 10];
        let n_draws = 10_000;
        for _ in 0..n_draws {
            let joint = team.act(&obs, true).unwrap();
            let [a1, _] = joint.get(0);
            buckets[((a1 * 10.0) as usize).min(9)] += 1;
        }
        let expected = n_draws as f64 / 10.0;
        for (i, &count) in buckets.iter().enumerate() {
            let dev = (count as f64 - expected).abs() / expected;
            assert!(dev < 0.15, "bucket {i} deviates {dev:.3} from uniform");
        }
    }

    /// Builds a team with a few transitions pushed in.
    fn warm_team(gamma: f64, done: bool, reward: f64) -> MaddpgTeam {
        let mut config = tiny_config();
        config.gamma = gamma;
        let mut team = MaddpgTeam::new(4, 3, 2, config, 17);
        for i in 0..16 {
            let tag = i as f64 / 16.0;
            team.store(Transition {
                state: vec![tag; 4],
                obs: vec![vec![tag; 3], vec![tag; 3]],
                actions: vec![[0.4, 0.6], [0.7, 0.2]],
                rewards: vec![reward, reward * 0.5],
                next_state: vec![tag + 0.1; 4],
                next_obs: vec![vec![tag + 0.1; 3], vec![tag + 0.1; 3]],
                done: vec![done; 2],
            });
        }
        team
    }

    #[test]
    fn gamma_zero_target_is_exactly_the_reward() {
        // With gamma = 0 the critic target collapses to the stored reward:
        // training a critic toward it must drive the loss to the batch
        // variance around those rewards, independent of the target critic.
        let mut team_a = warm_team(0.0, false, 1.25);
        let mut team_b = warm_team(0.0, true, 1.25);
        // Identical seeds and data except the done flag: with gamma = 0
        // the done mask has no effect, so training trajectories match.
        for _ in 0..5 {
            let ma = team_a.train_step().unwrap();
            let mb = team_b.train_step().unwrap();
            assert_eq!(ma, mb);
        }
    }

    #[test]
    fn done_masks_the_bootstrap_term() {
        // With gamma > 0, done = true removes the target-critic term; the
        // two runs must diverge unless the bootstrap contributes nothing.
        let mut with_bootstrap = warm_team(0.9, false, 1.0);
        let mut without_bootstrap = warm_team(0.9, true, 1.0);
        let ma = with_bootstrap.train_step().unwrap();
        let mb = without_bootstrap.train_step().unwrap();
        assert_ne!(ma.critic_loss, mb.critic_loss);
    }

    #[test]
    fn train_step_requires_a_warm_buffer() {
        let mut team = MaddpgTeam::new(4, 3, 2, tiny_config(), 1);
        assert!(matches!(
            team.train_step(),
            Err(AgentError::InsufficientBuffer { .. })
        ));
    }

    #[test]
    fn critic_overfits_a_fixed_batch() {
        let mut team = warm_team(0.0, false, 2.0);
        let first = team.train_step().unwrap();
        let mut last = first.clone();
        for _ in 0..49 {
            last = team.train_step().unwrap();
        }
        for m in 0..2 {
            assert!(
                last.critic_loss[m] < first.critic_loss[m],
                "critic {m} loss did not decrease: {} -> {}",
                first.critic_loss[m],
                last.critic_loss[m]
            );
        }
    }

    #[test]
    fn targets_equal_mains_after_full_soft_update() {
        let mut team = warm_team(0.5, false, 1.0);
        team.train_step().unwrap();
        for agent in &mut team.agents {
            soft_update(&mut agent.actor_target, &agent.actor, 1.0).unwrap();
            soft_update(&mut agent.critic_target, &agent.critic, 1.0).unwrap();
            assert_eq!(agent.actor_target, agent.actor);
            assert_eq!(agent.critic_target, agent.critic);
        }
    }

    #[test]
    fn eval_episodes_are_reproducible_and_valid() {
        let mut env = env_fixture();
        let mut team = MaddpgTeam::new(
            Env::state_dim(env.scenario()),
            Env::obs_dim(env.scenario()),
            2,
            tiny_config(),
            23,
        );
        let a = run_episode(&mut env, &mut team, Mode::Eval).unwrap();
        let mut env2 = env_fixture();
        let b = run_episode(&mut env2, &mut team, Mode::Eval).unwrap();
        assert_eq!(a.decision, b.decision);
        assert_eq!(a.reward, b.reward);
        assert_eq!(a.steps, 6);
        a.decision
            .check(env.layout(), env.scenario())
            .expect("episode decisions satisfy capacity and coverage");
    }

    #[test]
    fn episode_reward_accumulates_step_sums() {
        let mut env = env_fixture();
        let mut team = MaddpgTeam::new(
            Env::state_dim(env.scenario()),
            Env::obs_dim(env.scenario()),
            2,
            tiny_config(),
            29,
        );
        // Replay the same policy manually and compare.
        let mut env_manual = env_fixture();
        let mut manual_total = 0.0;
        while !env_manual.is_finished() {
            let obs: Vec<Vec<f64>> = (0..2).map(|m| env_manual.observe(m)).collect();
            let joint = team.act(&obs, false).unwrap();
            manual_total += env_manual.step(&joint).unwrap().global_reward;
        }
        let result = run_episode(&mut env, &mut team, Mode::Eval).unwrap();
        assert!((result.reward - manual_total).abs() < 1e-12);
    }

    #[test]
    fn drl_only_reward_is_pure_negative_marginal_cost() {
        let sc = small_scenario(4);
        let layout = crate::graph::GraphLayout::new(
            4,
            &[(0, 1), (1, 2)],
            &[(200.0, 200.0), (300.0, 200.0), (700.0, 300.0), (800.0, 200.0)],
            &[50.0; 4],
        )
        .unwrap();
        let mut env = drl_only_env(sc, layout).unwrap();
        while !env.is_finished() {
            let out = env.step_direct(0).unwrap();
            assert_eq!(out.penalty, 0.0);
            let winner: f64 = out.rewards.iter().sum();
            assert!((winner + out.marginal_cost).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_roundtrip_preserves_policies() {
        let dir = tempfile::tempdir().unwrap();
        let team = MaddpgTeam::new(6, 4, 3, tiny_config(), 31);
        team.save(dir.path()).unwrap();
        let loaded = MaddpgTeam::load(dir.path(), tiny_config(), 99).unwrap();
        assert_eq!(loaded.n_agents(), 3);
        for m in 0..3 {
            assert_eq!(loaded.agent(m).actor, team.agent(m).actor);
            assert_eq!(loaded.agent(m).critic_target, team.agent(m).critic_target);
        }
    }
}
