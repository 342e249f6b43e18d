//! Offloading policies: the multi-agent actor-critic trainer, a
//! single-agent PPO baseline, and the greedy/random baselines.

mod baselines;
mod maddpg;
mod ppo;
mod replay;

pub use baselines::{greedy_offload, random_offload};
pub use maddpg::{
    drl_only_env, run_episode, EpisodeResult, MaddpgAgent, MaddpgConfig, MaddpgTeam, Mode,
};
pub use ppo::{clip_ratio, ptom_offload, ptom_train_episode, PpoConfig, PtomPolicy};
pub use replay::{ReplayBuffer, Transition};

use crate::env::EnvError;
use crate::nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no server has remaining capacity")]
    AllServersFull,
    #[error("replay buffer holds {have} transitions, need {need}")]
    InsufficientBuffer { have: usize, need: usize },
    #[error("policy has not been trained yet")]
    InsufficientEpisodes,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
