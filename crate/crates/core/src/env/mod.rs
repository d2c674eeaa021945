//! MDP core types, the environment contract and the concrete environments.

mod chain;
mod grid;
mod point_mass;

use std::fmt;
use std::ops::Deref;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use chain::ChainMdp;
pub use grid::{grid_step, minigrid_step, GridAction, GridWorld, MINIGRID_CENTER, MINIGRID_SIZE};
pub use point_mass::{PointMass, POINT_MASS_DT};

use crate::{Error, Result};

/// A state as a real vector. Grid cells are integer pairs embedded as reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVec(pub Vec<f64>);

impl StateVec {
    pub fn new(coords: Vec<f64>) -> Self {
        StateVec(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for StateVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVec {
    fn from(v: Vec<f64>) -> Self {
        StateVec(v)
    }
}

/// An action value: an index for discrete spaces, a vector for continuous ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(v) => Some(v),
            Action::Discrete(_) => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Discrete(a) => write!(f, "{a}"),
            Action::Continuous(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionSpec {
    Discrete { count: usize },
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpec {
    pub fn discrete(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::config(format!(
                "discrete action space needs at least 2 actions, got {count}"
            )));
        }
        Ok(ActionSpec::Discrete { count })
    }

    pub fn continuous(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(Error::config("continuous bounds must be non-empty and of equal length"));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l < h)) {
            return Err(Error::config("continuous bounds need low < high in every dimension"));
        }
        Ok(ActionSpec::Continuous { low, high })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpec::Discrete { .. })
    }

    /// Number of discrete actions, or the dimension of a continuous action.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpec::Discrete { count } => *count,
            ActionSpec::Continuous { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpec::Discrete { count }, Action::Discrete(a)) => a < count,
            (ActionSpec::Continuous { low, .. }, Action::Continuous(v)) => {
                v.len() == low.len() && v.iter().all(|x| x.is_finite())
            }
            _ => false,
        }
    }

    pub fn sample_uniform(&self, rng: &mut crate::Rng) -> Action {
        match self {
            ActionSpec::Discrete { count } => Action::Discrete(rng.random_range(0..*count)),
            ActionSpec::Continuous { low, high } => Action::Continuous(
                low.iter()
                    .zip(high)
                    .map(|(l, h)| rng.random_range(*l..*h))
                    .collect(),
            ),
        }
    }

    /// Clamps a continuous action into bounds; discrete actions pass through.
    pub fn clamp(&self, action: Action) -> Action {
        match (self, action) {
            (ActionSpec::Continuous { low, high }, Action::Continuous(v)) => Action::Continuous(
                v.iter()
                    .zip(low.iter().zip(high))
                    .map(|(x, (l, h))| x.clamp(*l, *h))
                    .collect(),
            ),
            (_, a) => a,
        }
    }
}

/// One stored environment interaction.
///
/// `terminal` marks an absorbing end (goal reached); episodes cut by the time
/// limit are not terminal, so learners keep bootstrapping through them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: StateVec,
    pub action: Action,
    pub reward: f64,
    pub next_state: StateVec,
    pub terminal: bool,
    pub episode_start: bool,
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next_state: StateVec,
    pub reward: f64,
    /// The episode is over (goal reached or episode length exhausted).
    pub terminal: bool,
    /// The episode ended only because the step budget ran out.
    pub truncated: bool,
}

impl Step {
    /// Whether the transition ended in an absorbing state.
    pub fn absorbing(&self) -> bool {
        self.terminal && !self.truncated
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    MiniGrid,
    SparseGoalGrid,
    Chain,
    PointMass,
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvName::MiniGrid => "mini-grid",
            EnvName::SparseGoalGrid => "sparse-goal-grid",
            EnvName::Chain => "chain",
            EnvName::PointMass => "point-mass",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSpec {
    None,
    SparseGoal,
    Dense,
}

/// Seeded reset/step interface shared by every environment.
pub trait Environment: Send {
    fn action_spec(&self) -> &ActionSpec;

    fn state_dim(&self) -> usize;

    fn episode_length(&self) -> usize;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self) -> StateVec;

    /// Advances one step. Fails if the environment was never reset, if the
    /// current episode already ended, or if `action` is outside the spec.
    fn step(&mut self, action: &Action) -> Result<Step>;

    /// Size of a finite state space, for tabular learners.
    fn num_states(&self) -> Option<usize> {
        None
    }

    /// Index of `state` in a finite state space.
    fn state_index(&self, _state: &StateVec) -> Option<usize> {
        None
    }
}

/// Lifecycle of an episode inside an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum EpisodeStatus {
    NotReset,
    Running,
    Done,
}

impl EpisodeStatus {
    pub(crate) fn check_steppable(self) -> Result<()> {
        match self {
            EpisodeStatus::Running => Ok(()),
            EpisodeStatus::NotReset => Err(Error::EnvState("step called before reset".into())),
            EpisodeStatus::Done => Err(Error::EnvState(
                "step called on a finished episode; reset first".into(),
            )),
        }
    }
}

fn default_reward() -> Option<RewardSpec> {
    None
}

/// Environment selection plus the handful of parameters each environment takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: EnvName,
    pub episode_length: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults per environment: none for the mini-grid, sparse-goal for the
    /// goal grid and the chain, dense for the point-mass.
    #[serde(default = "default_reward", skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardSpec>,
    /// Grid side length (grids) or number of states (chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Goal cell for grids, goal position for the point-mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<[f64; 2]>,
    /// Half-width of the uniform start perturbation of the point-mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_noise: Option<f64>,
}

impl EnvConfig {
    pub fn new(name: EnvName, episode_length: usize) -> Self {
        EnvConfig {
            name,
            episode_length,
            seed: 0,
            reward: None,
            size: None,
            goal: None,
            start_noise: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn reward_spec(&self) -> RewardSpec {
        self.reward.unwrap_or(match self.name {
            EnvName::MiniGrid => RewardSpec::None,
            EnvName::SparseGoalGrid | EnvName::Chain => RewardSpec::SparseGoal,
            EnvName::PointMass => RewardSpec::Dense,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::config("episode_length must be at least 1"));
        }
        self.build().map(|_| ())
    }

    /// `(center, half_width)` of each state coordinate's typical range.
    pub fn feature_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self.name {
            EnvName::MiniGrid | EnvName::SparseGoalGrid => {
                let n = self.size.unwrap_or(MINIGRID_SIZE as usize) as f64;
                let c = (n - 1.0) / 2.0;
                (vec![c; 2], vec![c.max(0.5); 2])
            }
            EnvName::Chain => {
                let c = (self.size.unwrap_or(10) as f64 - 1.0) / 2.0;
                (vec![c], vec![c.max(0.5)])
            }
            EnvName::PointMass => (vec![0.0; 4], vec![1.0; 4]),
        }
    }

    /// Builds the environment with this config's seed.
    pub fn build(&self) -> Result<Box<dyn Environment>> {
        self.build_seeded(self.seed)
    }

    /// Builds a copy of the environment with a different seed.
    pub fn build_seeded(&self, seed: u64) -> Result<Box<dyn Environment>> {
        if self.episode_length == 0 {
            return Err(Error::config("episode_length must be at least 1"));
        }
        let reward = self.reward_spec();
        Ok(match self.name {
            EnvName::MiniGrid => {
                let mut g = GridWorld::mini_grid(self.episode_length);
                if let Some(size) = self.size {
                    let c = (size as i64 - 1) / 2;
                    g = GridWorld::new(size, (c, c), None, reward, self.episode_length)?;
                } else if reward != RewardSpec::None {
                    return Err(Error::config("mini-grid is reward-free; use sparse-goal-grid"));
                }
                Box::new(g)
            }
            EnvName::SparseGoalGrid => {
                let size = self.size.unwrap_or(MINIGRID_SIZE as usize);
                let c = (size as i64 - 1) / 2;
                let goal = match self.goal {
                    Some([x, y]) => (x as i64, y as i64),
                    None => GridWorld::default_goal(size),
                };
                Box::new(GridWorld::new(size, (c, c), Some(goal), reward, self.episode_length)?)
            }
            EnvName::Chain => Box::new(ChainMdp::new(
                self.size.unwrap_or(10),
                reward,
                self.episode_length,
            )?),
            EnvName::PointMass => {
                let goal = self.goal.unwrap_or([0.5, 0.5]);
                Box::new(PointMass::new(
                    goal,
                    self.start_noise.unwrap_or(0.0),
                    reward,
                    self.episode_length,
                    seed,
                )?)
            }
        })
    }
}
