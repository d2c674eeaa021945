use rand::Rng as _;

use crate::env::{Action, StateVec, Transition};

/// Default replay capacity.
pub const DEFAULT_CAPACITY: usize = 1_000_000;

/// FIFO ring of transitions; the oldest record is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    head: usize,
}

/// A training sample with its n-step return already folded in.
#[derive(Clone, Debug, PartialEq)]
pub struct NStepSample {
    pub state: StateVec,
    pub action: Action,
    /// Discounted reward sum over the (possibly truncated) window.
    pub reward: f64,
    pub next_state: StateVec,
    /// Multiplier on the bootstrap value: `gamma^k`, or 0 after a terminal.
    pub discount: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            data: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Record at logical position `i`, oldest first.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        if i >= self.data.len() {
            return None;
        }
        let start = if self.data.len() < self.capacity { 0 } else { self.head };
        Some(&self.data[(start + i) % self.data.len()])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        (0..self.len()).map(|i| self.get(i).expect("in range"))
    }

    /// `n` uniform draws with replacement, or `None` while the buffer is
    /// empty. Warmup before the first update is the trainer's job.
    pub fn sample(&self, n: usize, rng: &mut crate::Rng) -> Option<Vec<&Transition>> {
        self.sample_indices(n, rng)
            .map(|idx| idx.into_iter().map(|i| self.get(i).expect("in range")).collect())
    }

    fn sample_indices(&self, n: usize, rng: &mut crate::Rng) -> Option<Vec<usize>> {
        if self.is_empty() {
            return None;
        }
        Some((0..n).map(|_| rng.random_range(0..self.len())).collect())
    }

    /// Samples `n` start positions and folds `n_step` rewards from each.
    ///
    /// A window stops early at a terminal (no bootstrap), at an episode
    /// boundary, or at the newest record (bootstrap from the last next state).
    pub fn sample_nstep(
        &self,
        n: usize,
        n_step: usize,
        gamma: f64,
        rng: &mut crate::Rng,
    ) -> Option<Vec<NStepSample>> {
        let idx = self.sample_indices(n, rng)?;
        Some(idx.into_iter().map(|i| self.nstep_at(i, n_step, gamma)).collect())
    }

    pub fn nstep_at(&self, i: usize, n_step: usize, gamma: f64) -> NStepSample {
        let first = self.get(i).expect("index in range");
        let mut rewards = Vec::with_capacity(n_step);
        let mut last = first;
        let mut terminal = false;
        for k in 0..n_step.max(1) {
            let t = self.get(i + k).expect("checked below");
            rewards.push(t.reward);
            last = t;
            if t.terminal {
                terminal = true;
                break;
            }
            match self.get(i + k + 1) {
                Some(next) if !next.episode_start => {}
                _ => break,
            }
        }
        let steps = rewards.len() as i32;
        NStepSample {
            state: first.state.clone(),
            action: first.action.clone(),
            reward: super::nstep_target(&rewards, gamma, 0.0, true),
            next_state: last.next_state.clone(),
            discount: if terminal { 0.0 } else { gamma.powi(steps) },
        }
    }
}
