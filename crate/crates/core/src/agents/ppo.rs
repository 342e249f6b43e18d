//! Single-agent PPO baseline: one policy over the global state with an
//! M-way categorical head (which server takes the current user), a value
//! baseline, Monte-Carlo returns, and the clipped surrogate objective.

use super::AgentError;
use crate::cost::OffloadDecision;
use crate::env::Env;
use crate::nn::{adam_step, AdamState, Gradients, Mlp, OutputActivation};
use crate::derive_seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub clip: f64,
    pub epochs: usize,
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            learning_rate: 3e-4,
            gamma: 0.99,
            clip: 0.2,
            epochs: 4,
            reward_scale: 0.02,
        }
    }
}

/// Clipped probability ratio, the heart of the surrogate objective.
pub fn clip_ratio(ratio: f64, clip: f64) -> f64 {
    ratio.clamp(1.0 - clip, 1.0 + clip)
}

#[derive(Debug, Clone)]
pub struct PtomPolicy {
    pub policy: Mlp,
    pub value: Mlp,
    policy_opt: AdamState,
    value_opt: AdamState,
    n_servers: usize,
    pub config: PpoConfig,
    pub episodes_trained: usize,
}

impl PtomPolicy {
    pub fn new(state_dim: usize, n_servers: usize, config: PpoConfig, seed: u64) -> Self {
        let mut policy_dims = vec![state_dim];
        policy_dims.extend_from_slice(&config.hidden);
        policy_dims.push(n_servers);
        let mut value_dims = vec![state_dim];
        value_dims.extend_from_slice(&config.hidden);
        value_dims.push(1);
        let policy = Mlp::new(
            &policy_dims,
            OutputActivation::Identity,
            derive_seed(seed, "ptom-policy"),
        );
        let value = Mlp::new(
            &value_dims,
            OutputActivation::Identity,
            derive_seed(seed, "ptom-value"),
        );
        Self {
            policy_opt: AdamState::new(&policy, config.learning_rate),
            value_opt: AdamState::new(&value, config.learning_rate),
            policy,
            value,
            n_servers,
            config,
            episodes_trained: 0,
        }
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    /// Softmax over the logits of servers that still have capacity; closed
    /// servers get probability zero.
    pub fn masked_probs(&self, state: &[f64], open: &[bool]) -> Result<Vec<f64>, AgentError> {
        let logits = self.policy.forward(state)?.output().to_vec();
        Ok(masked_softmax(&logits, open))
    }

    pub fn save(&self, dir: &Path) -> Result<(), AgentError> {
        std::fs::create_dir_all(dir)?;
        let mut meta = std::io::BufWriter::new(std::fs::File::create(dir.join("ptom_meta.txt"))?);
        writeln!(meta, "n_servers {}", self.n_servers)?;
        writeln!(meta, "episodes_trained {}", self.episodes_trained)?;
        drop(meta);
        self.policy.save(&dir.join("ptom_policy.bin"))?;
        self.value.save(&dir.join("ptom_value.bin"))?;
        Ok(())
    }

    pub fn load(dir: &Path, config: PpoConfig) -> Result<Self, AgentError> {
        let meta = std::fs::File::open(dir.join("ptom_meta.txt"))
            .map_err(|e| AgentError::Checkpoint(format!("missing ptom_meta.txt: {e}")))?;
        let mut n_servers = None;
        let mut episodes_trained = 0usize;
        for line in std::io::BufReader::new(meta).lines() {
            let line = line?;
            let mut it = line.split_whitespace();
            match (it.next(), it.next()) {
                (Some("n_servers"), Some(v)) => n_servers = v.parse().ok(),
                (Some("episodes_trained"), Some(v)) => {
                    episodes_trained = v.parse().unwrap_or(0)
                }
                _ => {}
            }
        }
        let n_servers = n_servers
            .ok_or_else(|| AgentError::Checkpoint("ptom_meta.txt lacks n_servers".into()))?;
        let policy = Mlp::load(&dir.join("ptom_policy.bin"), OutputActivation::Identity)?;
        let value = Mlp::load(&dir.join("ptom_value.bin"), OutputActivation::Identity)?;
        let config_clone = config.clone();
        Ok(Self {
            policy_opt: AdamState::new(&policy, config.learning_rate),
            value_opt: AdamState::new(&value, config.learning_rate),
            policy,
            value,
            n_servers,
            config: config_clone,
            episodes_trained,
        })
    }
}

fn masked_softmax(logits: &[f64], open: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(open)
        .filter(|(_, &o)| o)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs = vec![0.0; logits.len()];
    let mut denom = 0.0;
    for k in 0..logits.len() {
        if open[k] {
            let e = (logits[k] - max).exp();
            probs[k] = e;
            denom += e;
        }
    }
    for p in &mut probs {
        *p /= denom;
    }
    probs
}

fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_open = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_open = k;
            acc += p;
            if draw < acc {
                return k;
            }
        }
    }
    last_open
}

struct Sample {
    state: Vec<f64>,
    open: Vec<bool>,
    action: usize,
    logp_old: f64,
    ret: f64,
}

/// Plays one episode with the stochastic policy, then runs the clipped
/// surrogate and value updates on its Monte-Carlo returns. Returns the
/// unscaled episode reward and the final value loss.
pub fn ptom_train_episode(
    policy: &mut PtomPolicy,
    env: &mut Env,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64), AgentError> {
    let mut samples: Vec<Sample> = Vec::with_capacity(env.steps_total());
    let mut rewards: Vec<f64> = Vec::with_capacity(env.steps_total());
    let mut total_unscaled = 0.0;

    while !env.is_finished() {
        let state = env.global_state();
        let open: Vec<bool> = (0..policy.n_servers)
            .map(|k| env.remaining_capacity(k) > 0)
            .collect();
        let probs = policy.masked_probs(&state, &open)?;
        let action = sample_categorical(&probs, rng);
        let outcome = env.step_direct(action)?;
        total_unscaled += outcome.global_reward;
        rewards.push(outcome.global_reward * policy.config.reward_scale);
        samples.push(Sample {
            state,
            open,
            action,
            logp_old: probs[action].max(1e-12).ln(),
            ret: 0.0,
        });
    }

    // Monte-Carlo returns, discounted backward.
    let mut g = 0.0;
    for (sample, &r) in samples.iter_mut().zip(rewards.iter()).rev() {
        g = r + policy.config.gamma * g;
        sample.ret = g;
    }

    let batch = samples.len() as f64;
    let mut value_loss = 0.0;
    for _ in 0..policy.config.epochs {
        let mut policy_grads = Gradients::zeros_like(&policy.policy);
        let mut value_grads = Gradients::zeros_like(&policy.value);
        value_loss = 0.0;
        for sample in &samples {
            let value_cache = policy.value.forward(&sample.state)?;
            let v = value_cache.output()[0];
            let advantage = sample.ret - v;
            let err = v - sample.ret;
            value_loss += err * err / batch;
            policy
                .value
                .backward_acc(&value_cache, &[2.0 * err / batch], &mut value_grads)?;

            let policy_cache = policy.policy.forward(&sample.state)?;
            let probs = masked_softmax(policy_cache.output(), &sample.open);
            let logp_new = probs[sample.action].max(1e-12).ln();
            let ratio = (logp_new - sample.logp_old).exp();
            // The clipped branch contributes no gradient.
            let clip = policy.config.clip;
            let clipped_active =
                (advantage > 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip);
            if !clipped_active {
                // d(-surrogate)/d logits = -(ratio * A) * (onehot - probs).
                let coeff = ratio * advantage / batch;
                let mut d_logits = vec![0.0; policy.n_servers];
                for k in 0..policy.n_servers {
                    if sample.open[k] {
                        let onehot = if k == sample.action { 1.0 } else { 0.0 };
                        d_logits[k] = -coeff * (onehot - probs[k]);
                    }
                }
                policy
                    .policy
                    .backward_acc(&policy_cache, &d_logits, &mut policy_grads)?;
            }
        }
        adam_step(&mut policy.policy, &policy_grads, &mut policy.policy_opt);
        adam_step(&mut policy.value, &value_grads, &mut policy.value_opt);
    }
    policy.episodes_trained += 1;
    Ok((total_unscaled, value_loss))
}

/// Greedy rollout: every user goes to the argmax-probability server among
/// those with remaining capacity.
pub fn ptom_offload(policy: &PtomPolicy, env: &mut Env) -> Result<OffloadDecision, AgentError> {
    if policy.episodes_trained == 0 {
        return Err(AgentError::InsufficientEpisodes);
    }
    while !env.is_finished() {
        let state = env.global_state();
        let open: Vec<bool> = (0..policy.n_servers)
            .map(|k| env.remaining_capacity(k) > 0)
            .collect();
        let probs = policy.masked_probs(&state, &open)?;
        let action = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(k, _)| k)
            .unwrap();
        env.step_direct(action)?;
    }
    Ok(env.decision().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::tests::small_scenario;
    use crate::partition::Partition;
    use rand::SeedableRng;

    #[test]
    fn clip_ratio_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(0.0..5.0);
            let c = clip_ratio(r, 0.2);
            assert!((0.8..=1.2).contains(&c));
        }
    }

    #[test]
    fn zero_logits_give_exact_uniform_entropy() {
        let probs = masked_softmax(&[0.0; 4], &[true; 4]);
        let entropy: f64 = probs.iter().map(|&p| -p * p.ln()).sum();
        assert!((entropy - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fresh_policy_is_near_uniform() {
        let policy = PtomPolicy::new(20, 4, PpoConfig::default(), 5);
        let state = vec![0.3; 20];
        let probs = policy
            .masked_probs(&state, &[true, true, true, true])
            .unwrap();
        let entropy: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        assert!(
            entropy > 0.75 * 4.0f64.ln(),
            "entropy {entropy} far from uniform"
        );
    }

    #[test]
    fn masked_servers_get_zero_probability() {
        let policy = PtomPolicy::new(8, 3, PpoConfig::default(), 1);
        let probs = policy
            .masked_probs(&vec![0.1; 8], &[true, false, true])
            .unwrap();
        assert_eq!(probs[1], 0.0);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn offload_requires_training_and_is_valid_after() {
        let sc = small_scenario(4);
        let layout = crate::graph::GraphLayout::new(
            4,
            &[(0, 1), (2, 3)],
            &[(200.0, 200.0), (300.0, 300.0), (700.0, 200.0), (800.0, 300.0)],
            &[50.0; 4],
        )
        .unwrap();
        let make_env = || {
            crate::env::Env::reset(
                sc.clone(),
                layout.clone(),
                Partition::single(&layout),
                0.0,
            )
            .unwrap()
        };
        let mut policy = PtomPolicy::new(crate::env::Env::state_dim(&sc), 2, PpoConfig::default(), 9);
        assert!(matches!(
            ptom_offload(&policy, &mut make_env()),
            Err(AgentError::InsufficientEpisodes)
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            ptom_train_episode(&mut policy, &mut make_env(), &mut rng).unwrap();
        }
        let decision = ptom_offload(&policy, &mut make_env()).unwrap();
        decision.check(&layout, &sc).unwrap();
        // Deterministic rollout.
        let again = ptom_offload(&policy, &mut make_env()).unwrap();
        assert_eq!(decision, again);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut policy = PtomPolicy::new(6, 3, PpoConfig::default(), 77);
        policy.episodes_trained = 12;
        policy.save(dir.path()).unwrap();
        let loaded = PtomPolicy::load(dir.path(), PpoConfig::default()).unwrap();
        assert_eq!(loaded.policy, policy.policy);
        assert_eq!(loaded.value, policy.value);
        assert_eq!(loaded.episodes_trained, 12);
        assert_eq!(loaded.n_servers(), 3);
    }
}
