//! Dynamic-state sweep: evaluates one method across (users, associations)
//! points and seeds, recording per-run and per-point-mean costs.

use super::build::{build_layout, build_scenario};
use super::config::{ExperimentConfig, Method};
use super::events::shuffle_positions;
use super::{fmt6, resolve_zeta, write_csv, HarnessError, OutPaths};
use crate::agents::{
    greedy_offload, ptom_offload, random_offload, run_episode, MaddpgConfig, MaddpgTeam, Mode,
    PpoConfig, PtomPolicy,
};
use crate::cost::{cross_server_cost, system_cost, OffloadDecision, Scenario};
use crate::derive_seed;
use crate::env::Env;
use crate::graph::GraphLayout;
use crate::partition::{hicut, Partition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const SWEEP_HEADER: &str =
    "method,dataset,n_users,n_assoc,seed,T_all_s,I_all_mJ,cost,cross_server_mJ";

/// Policies loaded once per sweep.
pub(crate) enum LoadedPolicy {
    None,
    Maddpg(Box<MaddpgTeam>),
    Ptom(Box<PtomPolicy>),
}

pub(crate) fn maddpg_config_from(config: &ExperimentConfig) -> MaddpgConfig {
    MaddpgConfig {
        hidden: config.hidden.clone(),
        actor_lr: config.learning_rate,
        critic_lr: config.learning_rate,
        gamma: config.gamma,
        tau: config.tau,
        batch_size: config.batch_size,
        buffer_capacity: config.buffer_capacity,
        exploration_rate: config.exploration_rate,
        reward_scale: config.reward_scale,
        train_interval: config.train_interval.max(1),
        warmup_steps: config.warmup_steps,
        shared_reward: config.shared_reward,
    }
}

pub(crate) fn ppo_config_from(config: &ExperimentConfig) -> PpoConfig {
    PpoConfig {
        hidden: config.hidden.clone(),
        learning_rate: config.learning_rate,
        gamma: config.gamma,
        clip: config.ppo_clip,
        epochs: config.ppo_epochs,
        reward_scale: config.reward_scale,
    }
}

fn load_policy(config: &ExperimentConfig) -> Result<LoadedPolicy, HarnessError> {
    match config.method {
        Method::Gm | Method::Rm => Ok(LoadedPolicy::None),
        Method::Drlgo | Method::DrlOnly => {
            let dir = config.checkpoint.as_ref().ok_or_else(|| {
                HarnessError::MissingCheckpoint(format!(
                    "method {} needs a `checkpoint` config entry",
                    config.method.name()
                ))
            })?;
            let team = MaddpgTeam::load(dir, maddpg_config_from(config), 0)
                .map_err(|e| HarnessError::MissingCheckpoint(e.to_string()))?;
            Ok(LoadedPolicy::Maddpg(Box::new(team)))
        }
        Method::Ptom => {
            let dir = config.checkpoint.as_ref().ok_or_else(|| {
                HarnessError::MissingCheckpoint(
                    "method ptom needs a `checkpoint` config entry".into(),
                )
            })?;
            let policy = PtomPolicy::load(dir, ppo_config_from(config))
                .map_err(|e| HarnessError::MissingCheckpoint(e.to_string()))?;
            Ok(LoadedPolicy::Ptom(Box::new(policy)))
        }
    }
}

/// Produces the method's decision on one evaluation layout.
pub(crate) fn decide(
    method: Method,
    policy: &mut LoadedPolicy,
    config: &ExperimentConfig,
    scenario: &Scenario,
    layout: &GraphLayout,
    seed: u64,
) -> Result<OffloadDecision, HarnessError> {
    match (method, policy) {
        (Method::Gm, _) => Ok(greedy_offload(layout, scenario)?),
        (Method::Rm, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "rm"));
            Ok(random_offload(layout, scenario, &mut rng)?)
        }
        (Method::Drlgo, LoadedPolicy::Maddpg(team)) => {
            let (partition, _) = hicut(layout)?;
            let zeta = resolve_zeta(config, scenario, layout);
            check_dims(team, scenario)?;
            let mut env = Env::reset(scenario.clone(), layout.clone(), partition, zeta)?;
            Ok(run_episode(&mut env, team, Mode::Eval)?.decision)
        }
        (Method::DrlOnly, LoadedPolicy::Maddpg(team)) => {
            check_dims(team, scenario)?;
            let mut env = Env::reset(
                scenario.clone(),
                layout.clone(),
                Partition::single(layout),
                0.0,
            )?;
            Ok(run_episode(&mut env, team, Mode::Eval)?.decision)
        }
        (Method::Ptom, LoadedPolicy::Ptom(policy)) => {
            let mut env = Env::reset(
                scenario.clone(),
                layout.clone(),
                Partition::single(layout),
                0.0,
            )?;
            Ok(ptom_offload(policy, &mut env)?)
        }
        _ => unreachable!("policy kind follows the method"),
    }
}

fn check_dims(team: &MaddpgTeam, scenario: &Scenario) -> Result<(), HarnessError> {
    if team.obs_dim() != Env::obs_dim(scenario) || team.state_dim() != Env::state_dim(scenario) {
        return Err(HarnessError::Config(format!(
            "checkpoint was trained for obs/state dims {}/{} but this sweep needs {}/{}; \
             train with matching `user_slots` and `n_servers`",
            team.obs_dim(),
            team.state_dim(),
            Env::obs_dim(scenario),
            Env::state_dim(scenario),
        )));
    }
    Ok(())
}

/// Runs the sweep and writes `sweep.csv`: one row per evaluation plus one
/// `seed = mean` row per sweep point.
pub fn run_sweep(config: &ExperimentConfig, out: &OutPaths) -> Result<PathBuf, HarnessError> {
    let slots = config.effective_slots();
    let dataset = config.dataset_name();
    let mut policy = load_policy(config)?;
    let mut rows: Vec<String> = Vec::new();

    for &(n_users, n_assoc) in &config.sweep_points() {
        let mut sums = [0.0f64; 4];
        let mut count = 0usize;
        for &seed in &config.seeds {
            let point_seed = derive_seed(seed, &format!("point-{n_users}-{n_assoc}"));
            let scenario = build_scenario(config, slots, n_users, point_seed)?;
            let mut layout = build_layout(config, n_users, n_assoc, slots, point_seed)?;
            let evaluations = 1 + config.position_shuffle_steps;
            for step in 0..evaluations {
                if step > 0 {
                    layout = shuffle_positions(
                        &layout,
                        scenario.plane,
                        derive_seed(point_seed, &format!("shuffle{step}")),
                    );
                }
                let decision = decide(
                    config.method,
                    &mut policy,
                    config,
                    &scenario,
                    &layout,
                    derive_seed(point_seed, &format!("eval{step}")),
                )?;
                let breakdown = system_cost(&scenario, &layout, &decision)?;
                let cross = cross_server_cost(&scenario, &layout, &decision);
                rows.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    config.method.name(),
                    dataset,
                    n_users,
                    n_assoc,
                    seed,
                    fmt6(breakdown.t_all_s),
                    fmt6(breakdown.i_all_mj),
                    fmt6(breakdown.cost),
                    fmt6(cross),
                ));
                sums[0] += breakdown.t_all_s;
                sums[1] += breakdown.i_all_mj;
                sums[2] += breakdown.cost;
                sums[3] += cross;
                count += 1;
            }
        }
        let n = count as f64;
        rows.push(format!(
            "{},{},{},{},mean,{},{},{},{}",
            config.method.name(),
            dataset,
            n_users,
            n_assoc,
            fmt6(sums[0] / n),
            fmt6(sums[1] / n),
            fmt6(sums[2] / n),
            fmt6(sums[3] / n),
        ));
    }

    let path = out.sweep_csv();
    write_csv(&path, SWEEP_HEADER, &rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(method: Method) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.method = method;
        c.n_users = 8;
        c.n_assoc = 12;
        c.task_kb = 200.0;
        c.sweep_users = vec![6, 8];
        c.sweep_assoc = vec![8, 12];
        c.seeds = (1..=10).collect();
        c
    }

    #[test]
    fn sweep_row_counts_match_points_and_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutPaths::new(dir.path());
        let path = run_sweep(&tiny_config(Method::Gm), &out).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        // 2 points x 10 seeds + 2 mean rows.
        assert_eq!(lines.len(), 1 + 22);
        assert_eq!(lines.iter().filter(|l| l.contains(",mean,")).count(), 2);
    }

    #[test]
    fn gm_and_rm_both_yield_valid_costal_rows() {
        let dir = tempfile::tempdir().unwrap();
        for method in [Method::Gm, Method::Rm] {
            let out = OutPaths::new(&dir.path().join(method.name()));
            let path = run_sweep(&tiny_config(method), &out).unwrap();
            let text = std::fs::read_to_string(path).unwrap();
            for line in text.lines().skip(1) {
                let cost: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
                assert!(cost.is_finite() && cost > 0.0);
            }
        }
    }

    #[test]
    fn learned_method_without_checkpoint_is_a_clear_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutPaths::new(dir.path());
        let err = run_sweep(&tiny_config(Method::Drlgo), &out).unwrap_err();
        assert!(matches!(err, HarnessError::MissingCheckpoint(_)));
    }

    #[test]
    fn sweep_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out_a = OutPaths::new(&dir.path().join("a"));
        let out_b = OutPaths::new(&dir.path().join("b"));
        let mut config = tiny_config(Method::Rm);
        config.position_shuffle_steps = 2;
        let pa = run_sweep(&config, &out_a).unwrap();
        let pb = run_sweep(&config, &out_b).unwrap();
        assert_eq!(
            std::fs::read(pa).unwrap(),
            std::fs::read(pb).unwrap()
        );
    }
}
