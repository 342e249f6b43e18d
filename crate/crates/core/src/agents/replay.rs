//! Experience replay: a bounded ring of joint transitions with seeded
//! without-replacement batch sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// One joint step as stored for training. Rewards are stored already
/// scaled by the trainer's reward scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<[f64; 2]>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub done: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest-first eviction once full.
    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buf[idx]
    }

    /// Batch of distinct indices (sampling without replacement within the
    /// batch). Panics if the buffer holds fewer than `batch` transitions.
    pub fn sample_indices(&mut self, batch: usize) -> Vec<usize> {
        assert!(self.buf.len() >= batch);
        rand::seq::index::sample(&mut self.rng, self.buf.len(), batch).into_vec()
    }
}
