//! Training runner: per-episode dynamic user churn, re-partitioning, and
//! policy optimization, with a reward-curve CSV and checkpoints.

use super::build::{build_layout, build_scenario};
use super::config::{ExperimentConfig, Method};
use super::events::apply_dynamic_round;
use super::sweep::{maddpg_config_from, ppo_config_from};
use super::{fmt6, resolve_zeta, write_csv, HarnessError, OutPaths};
use crate::agents::{ptom_train_episode, run_episode, MaddpgTeam, Mode, PtomPolicy};
use crate::derive_seed;
use crate::env::Env;
use crate::partition::{hicut, Partition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const TRAIN_HEADER: &str = "episode,global_reward,critic_loss_mean,epsilon";

/// Outcome of a training run.
#[derive(Debug)]
pub struct TrainingArtifacts {
    pub curve_csv: PathBuf,
    pub checkpoint_dir: PathBuf,
    /// Per-episode unscaled global rewards.
    pub rewards: Vec<f64>,
}

/// Trains the configured method for `config.episodes` episodes. Every
/// episode first applies one dynamic round (user churn plus edge rewiring
/// at `change_rate`), then re-partitions and offloads all users once.
pub fn run_training(
    config: &ExperimentConfig,
    out: &OutPaths,
) -> Result<TrainingArtifacts, HarnessError> {
    if !config.method.is_learned() {
        return Err(HarnessError::Config(format!(
            "method `{}` has nothing to train; use drlgo, ptom, or drl_only",
            config.method.name()
        )));
    }
    let slots = config.effective_slots();
    let seed = config.train_seed;
    let scenario = build_scenario(config, slots, config.n_users, seed)?;
    let base_layout = build_layout(config, config.n_users, config.n_assoc, slots, seed)?;
    // Total capacity bounds how far the user count may drift upward.
    let max_active: usize = scenario.servers.iter().map(|s| s.capacity).sum();
    let zeta = resolve_zeta(config, &scenario, &base_layout);
    let band = match config.graph_style {
        crate::harness::config::GraphStyle::Banded => Some(config.band_width.max(1)),
        crate::harness::config::GraphStyle::Uniform => None,
    };

    let checkpoint_dir = out.checkpoint_dir();
    let mut rows = Vec::with_capacity(config.episodes);
    let mut rewards = Vec::with_capacity(config.episodes);

    match config.method {
        Method::Drlgo | Method::DrlOnly => {
            let mut team = MaddpgTeam::new(
                Env::state_dim(&scenario),
                Env::obs_dim(&scenario),
                scenario.n_servers(),
                maddpg_config_from(config),
                derive_seed(seed, "team"),
            );
            for episode in 1..=config.episodes {
                let layout = apply_dynamic_round(
                    &base_layout,
                    config.change_rate,
                    scenario.plane,
                    config.task_kb,
                    max_active,
                    band,
                    derive_seed(seed, &format!("event{episode}")),
                );
                let (partition, episode_zeta) = match config.method {
                    Method::Drlgo => (hicut(&layout)?.0, zeta),
                    _ => (Partition::single(&layout), 0.0),
                };
                let mut env = Env::reset(
                    scenario.clone(),
                    layout.clone(),
                    partition,
                    episode_zeta,
                )?;
                let result = run_episode(&mut env, &mut team, Mode::Train)?;
                rows.push(format!(
                    "{episode},{},{},{:.3}",
                    fmt6(result.reward),
                    fmt6(result.critic_loss_mean),
                    config.exploration_rate
                ));
                rewards.push(result.reward);
            }
            team.save(&checkpoint_dir)?;
        }
        Method::Ptom => {
            let mut policy = PtomPolicy::new(
                Env::state_dim(&scenario),
                scenario.n_servers(),
                ppo_config_from(config),
                derive_seed(seed, "ptom"),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "ptom-explore"));
            for episode in 1..=config.episodes {
                let layout = apply_dynamic_round(
                    &base_layout,
                    config.change_rate,
                    scenario.plane,
                    config.task_kb,
                    max_active,
                    band,
                    derive_seed(seed, &format!("event{episode}")),
                );
                let mut env = Env::reset(
                    scenario.clone(),
                    layout.clone(),
                    Partition::single(&layout),
                    0.0,
                )?;
                let (reward, value_loss) = ptom_train_episode(&mut policy, &mut env, &mut rng)?;
                rows.push(format!(
                    "{episode},{},{},0.000",
                    fmt6(reward),
                    fmt6(value_loss)
                ));
                rewards.push(reward);
            }
            policy.save(&checkpoint_dir)?;
        }
        _ => unreachable!("guarded above"),
    }

    let curve_csv = out.train_csv();
    write_csv(&curve_csv, TRAIN_HEADER, &rows)?;
    Ok(TrainingArtifacts {
        curve_csv,
        checkpoint_dir,
        rewards,
    })
}
