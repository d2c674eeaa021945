//! Mechanisms that decide when the behavior policy repeats its last action.

mod schedule;
mod zeta;

use num_bigint::BigUint;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use schedule::{schedule_probability, Schedule};
pub use zeta::{sample_zeta, ZetaDuration};

use crate::env::{Action, StateVec};
use crate::novelty::NoveltyEstimator;
use crate::{Error, Result};

/// Default truncation of zeta durations.
pub const DEFAULT_ZETA_MAX: usize = 100;
/// Zeta exponent used by the temporally-extended epsilon-greedy baseline.
pub const DEFAULT_ZETA_MU: f64 = 2.0;
/// Default repeat coefficient.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// `alpha / max(1, sqrt(n))`.
pub fn repeat_probability(n: u64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 1.0, "alpha out of (0, 1]: {alpha}");
    alpha / (n as f64).sqrt().max(1.0)
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("alpha must be in (0, 1], got {alpha}")))
    }
}

/// `|A|^ceil(H / kappa)`: how many length-`H` action sequences exist when
/// every decision is held for `kappa` steps (the last block may be shorter).
pub fn action_sequence_count(horizon: u64, kappa: u64, num_actions: u64) -> Result<BigUint> {
    if horizon == 0 || kappa == 0 || num_actions == 0 {
        return Err(Error::config("horizon, kappa and action count must all be positive"));
    }
    let decisions = horizon.div_ceil(kappa);
    let exp = u32::try_from(decisions)
        .map_err(|_| Error::config(format!("{decisions} decisions is too many to count")))?;
    Ok(BigUint::from(num_actions).pow(exp))
}

/// How the behavior policy repeats actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PersistenceStrategy {
    /// Always act with the target policy.
    None,
    /// Repeat with probability `alpha / max(1, sqrt(N(s)))`.
    Snap {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// With probability `epsilon(t)` start a random action held for a
    /// zeta-distributed number of steps; otherwise act greedily, unrepeated.
    /// `epsilon = 1` gives the pure random-zeta walk.
    Zeta {
        #[serde(default = "default_mu")]
        mu: f64,
        #[serde(default = "default_zeta_max")]
        n_max: usize,
        #[serde(default = "always")]
        epsilon: Schedule,
    },
    /// Hold every target action for exactly `kappa` steps.
    Fixed { kappa: usize },
    /// Repeat with a probability that only depends on the step.
    Linear { schedule: Schedule },
    Sigmoid { schedule: Schedule },
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_mu() -> f64 {
    DEFAULT_ZETA_MU
}

fn default_zeta_max() -> usize {
    DEFAULT_ZETA_MAX
}

fn always() -> Schedule {
    Schedule::Constant(1.0)
}

impl PersistenceStrategy {
    pub fn snap(alpha: f64) -> Self {
        PersistenceStrategy::Snap { alpha }
    }

    /// Random action with zeta durations at every fresh decision.
    pub fn random_zeta(mu: f64) -> Self {
        PersistenceStrategy::Zeta {
            mu,
            n_max: DEFAULT_ZETA_MAX,
            epsilon: always(),
        }
    }

    /// Repeat with a constant probability.
    pub fn constant(p: f64) -> Self {
        PersistenceStrategy::Linear {
            schedule: Schedule::Constant(p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PersistenceStrategy::None => "none",
            PersistenceStrategy::Snap { .. } => "snap",
            PersistenceStrategy::Zeta { .. } => "zeta",
            PersistenceStrategy::Fixed { .. } => "fixed",
            PersistenceStrategy::Linear { .. } => "linear",
            PersistenceStrategy::Sigmoid { .. } => "sigmoid",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PersistenceStrategy::None => Ok(()),
            PersistenceStrategy::Snap { alpha } => validate_alpha(*alpha),
            PersistenceStrategy::Zeta { mu, n_max, epsilon } => {
                ZetaDuration::new(*mu, *n_max)?;
                epsilon.validate_probability()
            }
            PersistenceStrategy::Fixed { kappa } => {
                if *kappa == 0 {
                    Err(Error::config("fixed persistence needs kappa >= 1"))
                } else {
                    Ok(())
                }
            }
            PersistenceStrategy::Linear { schedule } | PersistenceStrategy::Sigmoid { schedule } => {
                schedule.validate_probability()
            }
        }
    }

    pub fn needs_novelty(&self) -> bool {
        matches!(self, PersistenceStrategy::Snap { .. })
    }

    /// Action persistence implied by the strategy, for picking update cadence.
    pub fn nominal_kappa(&self) -> Option<usize> {
        match self {
            PersistenceStrategy::Fixed { kappa } => Some(*kappa),
            _ => None,
        }
    }
}

/// Per-run repeat bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceState {
    pub last_action: Option<Action>,
    pub repeat_remaining: usize,
    pub at_episode_start: bool,
}

impl Default for PersistenceState {
    fn default() -> Self {
        Self::new()
    }
}

impl PersistenceState {
    pub fn new() -> Self {
        PersistenceState {
            last_action: None,
            repeat_remaining: 0,
            at_episode_start: true,
        }
    }

    /// Clears pending repeats at an episode boundary.
    pub fn reset(&mut self) {
        *self = Self::new();
    }
}

/// Where fresh actions come from.
pub trait ActionSource {
    /// Target policy action, including the policy's own exploration.
    fn target_action(&mut self, state: &StateVec) -> Action;
    /// Exploit-only action.
    fn greedy_action(&mut self, state: &StateVec) -> Action;
    /// Uniformly random action.
    fn random_action(&mut self) -> Action;
}

/// Outcome of one behavior-policy decision.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// Probability that this step repeats the previous action: the adaptor
    /// or schedule value for probabilistic strategies, 1 or 0 for forced
    /// durations, 0 at episode starts.
    pub repeat_probability: f64,
    pub repeated: bool,
}

/// A validated strategy ready to drive a behavior policy.
#[derive(Clone, Debug)]
pub struct Persistence {
    strategy: PersistenceStrategy,
    zeta: Option<ZetaDuration>,
}

impl Persistence {
    pub fn new(strategy: PersistenceStrategy) -> Result<Self> {
        strategy.validate()?;
        let zeta = match &strategy {
            PersistenceStrategy::Zeta { mu, n_max, .. } => Some(ZetaDuration::new(*mu, *n_max)?),
            _ => None,
        };
        Ok(Persistence { strategy, zeta })
    }

    pub fn strategy(&self) -> &PersistenceStrategy {
        &self.strategy
    }

    /// Picks the next behavior action and updates `pstate`.
    ///
    /// At an episode start the target policy is always queried (zeta starts
    /// a fresh decision instead). `novelty` is required for SNAP.
    pub fn behavior_step(
        &self,
        pstate: &mut PersistenceState,
        state: &StateVec,
        t: u64,
        source: &mut dyn ActionSource,
        novelty: Option<&NoveltyEstimator>,
        rng: &mut crate::Rng,
    ) -> Result<Decision> {
        let start = pstate.at_episode_start || pstate.last_action.is_none();
        let (action, p, repeated) = match &self.strategy {
            PersistenceStrategy::None => (source.target_action(state), 0.0, false),
            PersistenceStrategy::Snap { alpha } => {
                let novelty = novelty.ok_or_else(|| {
                    Error::config("snap persistence needs a novelty estimator")
                })?;
                if start {
                    (source.target_action(state), 0.0, false)
                } else {
                    let p = repeat_probability(novelty.pseudo_count(state)?, *alpha);
                    self.draw_repeat(pstate, state, p, source, rng)
                }
            }
            PersistenceStrategy::Linear { schedule } | PersistenceStrategy::Sigmoid { schedule } => {
                if start {
                    (source.target_action(state), 0.0, false)
                } else {
                    self.draw_repeat(pstate, state, schedule.value(t), source, rng)
                }
            }
            PersistenceStrategy::Fixed { kappa } => {
                if !start && pstate.repeat_remaining > 0 {
                    pstate.repeat_remaining -= 1;
                    (pstate.last_action.clone().expect("not at start"), 1.0, true)
                } else {
                    pstate.repeat_remaining = kappa - 1;
                    (source.target_action(state), 0.0, false)
                }
            }
            PersistenceStrategy::Zeta { epsilon, .. } => {
                if !start && pstate.repeat_remaining > 0 {
                    pstate.repeat_remaining -= 1;
                    (pstate.last_action.clone().expect("not at start"), 1.0, true)
                } else if rng.random::<f64>() < epsilon.value(t) {
                    let n = self.zeta.as_ref().expect("built with zeta").sample(rng);
                    pstate.repeat_remaining = n - 1;
                    (source.random_action(), 0.0, false)
                } else {
                    pstate.repeat_remaining = 0;
                    (source.greedy_action(state), 0.0, false)
                }
            }
        };
        pstate.at_episode_start = false;
        pstate.last_action = Some(action.clone());
        Ok(Decision {
            action,
            repeat_probability: p,
            repeated,
        })
    }

    fn draw_repeat(
        &self,
        pstate: &PersistenceState,
        state: &StateVec,
        p: f64,
        source: &mut dyn ActionSource,
        rng: &mut crate::Rng,
    ) -> (Action, f64, bool) {
        if rng.random::<f64>() < p {
            (pstate.last_action.clone().expect("not at start"), p, true)
        } else {
            (source.target_action(state), p, false)
        }
    }
}
