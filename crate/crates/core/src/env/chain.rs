use super::{Action, ActionSpec, Environment, EpisodeStatus, RewardSpec, StateVec, Step};
use crate::{Error, Result};

/// Linear chain `0..n`. Action 0 moves left, action 1 moves right; the ends
/// are walls. Episodes start at state 0.
///
/// `SparseGoal` pays 1 and terminates on reaching `n - 1`. `Dense` pays
/// `position / (n - 1)` every step and also terminates at `n - 1`.
#[derive(Clone, Debug)]
pub struct ChainMdp {
    length: usize,
    reward: RewardSpec,
    episode_length: usize,
    spec: ActionSpec,
    pos: usize,
    steps: usize,
    status: EpisodeStatus,
}

impl ChainMdp {
    pub fn new(length: usize, reward: RewardSpec, episode_length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::config("chain needs at least 2 states"));
        }
        if episode_length == 0 {
            return Err(Error::config("episode_length must be at least 1"));
        }
        Ok(ChainMdp {
            length,
            reward,
            episode_length,
            spec: ActionSpec::Discrete { count: 2 },
            pos: 0,
            steps: 0,
            status: EpisodeStatus::NotReset,
        })
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

impl Environment for ChainMdp {
    fn action_spec(&self) -> &ActionSpec {
        &self.spec
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self) -> StateVec {
        self.pos = 0;
        self.steps = 0;
        self.status = EpisodeStatus::Running;
        StateVec(vec![0.0])
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        self.status.check_steppable()?;
        match action.as_discrete() {
            Some(0) => self.pos = self.pos.saturating_sub(1),
            Some(1) => self.pos = (self.pos + 1).min(self.length - 1),
            _ => return Err(Error::contract(format!("invalid chain action {action}"))),
        }
        self.steps += 1;
        let at_end = self.pos == self.length - 1;
        let (reward, goal) = match self.reward {
            RewardSpec::None => (0.0, false),
            RewardSpec::SparseGoal => (if at_end { 1.0 } else { 0.0 }, at_end),
            RewardSpec::Dense => (self.pos as f64 / (self.length - 1) as f64, at_end),
        };
        let terminal = goal || self.steps >= self.episode_length;
        if terminal {
            self.status = EpisodeStatus::Done;
        }
        Ok(Step {
            next_state: StateVec(vec![self.pos as f64]),
            reward,
            terminal,
            truncated: terminal && !goal,
        })
    }

    fn num_states(&self) -> Option<usize> {
        Some(self.length)
    }

    fn state_index(&self, state: &StateVec) -> Option<usize> {
        let x = *state.first()?;
        (x.fract() == 0.0 && x >= 0.0 && (x as usize) < self.length).then_some(x as usize)
    }
}
