//! Off-policy learners and the training loop that wraps them with a
//! persistence strategy.

pub mod actor_critic;
pub mod exploration;
pub mod net;
pub mod qtable;
pub mod replay;
mod train;

use serde::{Deserialize, Serialize};

use crate::env::{Action, ActionSpec, Environment, StateVec};
use crate::persistence::Schedule;
use crate::{Error, Result};

use actor_critic::{
    ddpg_actor_loss_grad, ddpg_critic_loss_grad, policy_sample, sac_actor_loss_grad,
    sac_critic_loss_grad, DdpgNets, SacNets, SacNoise,
};
use net::{dense_net_grad_step, Adam, Mlp, OutputActivation, TargetPair};
use qtable::{q_table_update_target, QTable};
use replay::NStepSample;

pub use train::{train_base, train_snap, EvalPoint, RunRecord, TrainOptions, Trainer};

/// `sum_i gamma^i r_i + gamma^n * bootstrap`, with no bootstrap past a terminal.
pub fn nstep_target(rewards: &[f64], gamma: f64, bootstrap: f64, terminal: bool) -> f64 {
    let mut g = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        g += discount * r;
        discount *= gamma;
    }
    if terminal {
        g
    } else {
        g + discount * bootstrap
    }
}

/// n-step horizon paired with action persistence `kappa`.
pub fn n_step_for_kappa(kappa: usize) -> usize {
    match kappa {
        0 | 1 => 6,
        2 | 3 => 3,
        _ => 2,
    }
}

/// Update interval paired with action persistence `kappa`.
pub fn update_every_for_kappa(kappa: usize) -> usize {
    match kappa {
        0 | 1 => 4,
        2 | 3 => 2,
        _ => 1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Tabular Q-learning (finite state spaces).
    QTable,
    /// Deterministic actor-critic.
    Ddpg,
    /// Entropy-regularized actor-critic with a fixed temperature.
    Sac,
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AgentKind::QTable => "q-table",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Sac => "sac",
        })
    }
}

/// Learner hyperparameters. Unset `n_step`/`update_every` follow the
/// persistence of the strategy (`kappa = 2` row when it has none).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub gamma: f64,
    /// Adam step size for network learners.
    pub lr: f64,
    /// Step size of the tabular learner.
    pub q_lr: f64,
    pub batch: usize,
    pub n_step: Option<usize>,
    pub update_every: Option<usize>,
    pub tau: f64,
    /// Steps before the first update.
    pub seed_frames: u64,
    /// Steps during which the target policy acts uniformly at random.
    pub exploration_steps: u64,
    /// Gaussian action-noise scale of the deterministic actor.
    pub stddev: Schedule,
    pub stddev_clip: f64,
    /// Epsilon schedule of the tabular learner.
    pub epsilon: Schedule,
    pub entropy_alpha: f64,
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            kind: AgentKind::QTable,
            gamma: 0.99,
            lr: 1e-4,
            q_lr: 0.5,
            batch: 256,
            n_step: None,
            update_every: None,
            tau: 0.01,
            seed_frames: 4000,
            exploration_steps: 2000,
            stddev: Schedule::linear(1.0, 0.1, 500_000.0),
            stddev_clip: 0.3,
            epsilon: Schedule::linear(1.0, 0.1, 500_000.0),
            entropy_alpha: 0.1,
            hidden: vec![64, 64],
            replay_capacity: replay::DEFAULT_CAPACITY,
        }
    }
}

impl AgentConfig {
    pub fn with_kind(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn n_step_resolved(&self, kappa: Option<usize>) -> usize {
        self.n_step.unwrap_or_else(|| n_step_for_kappa(kappa.unwrap_or(2)))
    }

    pub fn update_every_resolved(&self, kappa: Option<usize>) -> usize {
        self.update_every
            .unwrap_or_else(|| update_every_for_kappa(kappa.unwrap_or(2)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma {} must be in (0, 1)", self.gamma)));
        }
        if self.n_step == Some(0) {
            return Err(Error::config("n_step must be at least 1"));
        }
        if self.update_every == Some(0) {
            return Err(Error::config("update_every must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch must be at least 1"));
        }
        if self.replay_capacity == 0 {
            return Err(Error::config("replay_capacity must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr must be positive"));
        }
        if !(0.0..=1.0).contains(&self.q_lr) {
            return Err(Error::config("q_lr must be in [0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau must be in (0, 1]"));
        }
        if !(self.stddev_clip >= 0.0) {
            return Err(Error::config("stddev_clip must be non-negative"));
        }
        if !(self.entropy_alpha >= 0.0) {
            return Err(Error::config("entropy_alpha must be non-negative"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer sizes must be positive"));
        }
        self.epsilon.validate_shape()?;
        self.stddev.validate_shape()?;
        Ok(())
    }

    /// Rejects learner/environment mismatches.
    pub fn check_env(&self, env: &dyn Environment) -> Result<()> {
        match (self.kind, env.action_spec()) {
            (AgentKind::QTable, ActionSpec::Discrete { .. }) => {
                if env.num_states().is_none() {
                    return Err(Error::config("q-table needs a finite state space"));
                }
                Ok(())
            }
            (AgentKind::QTable, _) => Err(Error::config("q-table needs discrete actions")),
            (_, ActionSpec::Continuous { .. }) => Ok(()),
            (kind, _) => Err(Error::config(format!("{kind} needs continuous actions"))),
        }
    }
}

/// Learner state.
pub enum Learner {
    QTable {
        table: QTable,
        /// Environment copy used only to map states to table rows.
        indexer: Box<dyn Environment>,
    },
    Ddpg {
        nets: DdpgNets,
        actor_opt: Adam,
        critic_opt: Adam,
    },
    Sac {
        nets: SacNets,
        actor_opt: Adam,
        critic_opt: Adam,
    },
}

impl std::fmt::Debug for Learner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Learner::QTable { table, .. } => f.debug_struct("QTable").field("table", table).finish(),
            Learner::Ddpg { nets, .. } => f.debug_struct("Ddpg").field("nets", nets).finish(),
            Learner::Sac { nets, .. } => f.debug_struct("Sac").field("nets", nets).finish(),
        }
    }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl Learner {
    /// Fresh learner for `env`; `indexer` is a second copy of the same
    /// environment (only the tabular learner keeps it).
    pub fn new(
        cfg: &AgentConfig,
        env: &dyn Environment,
        indexer: Box<dyn Environment>,
        rng: &mut crate::Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        cfg.check_env(env)?;
        let sd = env.state_dim();
        let ad = env.action_spec().dim();
        Ok(match cfg.kind {
            AgentKind::QTable => Learner::QTable {
                table: QTable::new(env.num_states().expect("checked"), ad)?,
                indexer,
            },
            AgentKind::Ddpg => {
                let actor = Mlp::new(&layer_sizes(sd, &cfg.hidden, ad), OutputActivation::Tanh, rng);
                let critic = Mlp::new(&layer_sizes(sd + ad, &cfg.hidden, 1), OutputActivation::Identity, rng);
                Learner::Ddpg {
                    actor_opt: Adam::new(actor.num_params(), cfg.lr),
                    critic_opt: Adam::new(critic.num_params(), cfg.lr),
                    nets: DdpgNets {
                        actor: TargetPair::new(actor, cfg.tau)?,
                        critic: TargetPair::new(critic, cfg.tau)?,
                    },
                }
            }
            AgentKind::Sac => {
                let actor = Mlp::new(&layer_sizes(sd, &cfg.hidden, 2 * ad), OutputActivation::Identity, rng);
                let critic = Mlp::new(&layer_sizes(sd + ad, &cfg.hidden, 1), OutputActivation::Identity, rng);
                Learner::Sac {
                    actor_opt: Adam::new(actor.num_params(), cfg.lr),
                    critic_opt: Adam::new(critic.num_params(), cfg.lr),
                    nets: SacNets {
                        actor,
                        critic: TargetPair::new(critic, cfg.tau)?,
                    },
                }
            }
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Learner::QTable { .. } => AgentKind::QTable,
            Learner::Ddpg { .. } => AgentKind::Ddpg,
            Learner::Sac { .. } => AgentKind::Sac,
        }
    }

    fn row(&self, indexer: &dyn Environment, state: &StateVec) -> Result<usize> {
        indexer
            .state_index(state)
            .ok_or_else(|| Error::contract(format!("state {:?} has no table row", state.0)))
    }

    /// Action values of the tabular learner at `state`.
    pub fn q_values(&self, state: &StateVec) -> Result<&[f64]> {
        match self {
            Learner::QTable { table, indexer } => Ok(table.row(self.row(indexer.as_ref(), state)?)),
            _ => Err(Error::contract("only the tabular learner has a q-table")),
        }
    }

    /// Mean action of the network learners (no noise).
    pub fn mean_action(&self, state: &StateVec) -> Result<Vec<f64>> {
        match self {
            Learner::Ddpg { nets, .. } => Ok(nets.actor.online.forward(state)),
            Learner::Sac { nets, .. } => {
                let d = nets.actor.output_dim() / 2;
                Ok(policy_sample(&nets.actor, state, &vec![0.0; d]).action)
            }
            Learner::QTable { .. } => Err(Error::contract("the tabular learner has no mean action")),
        }
    }

    /// Exploit-only action of the target policy.
    pub fn greedy_action(&self, state: &StateVec) -> Result<Action> {
        match self {
            Learner::QTable { table, indexer } => {
                Ok(Action::Discrete(table.greedy(self.row(indexer.as_ref(), state)?)))
            }
            _ => Ok(Action::Continuous(self.mean_action(state)?)),
        }
    }

    /// One learner update on an n-step minibatch.
    pub fn update(&mut self, batch: &[NStepSample], cfg: &AgentConfig, rng: &mut crate::Rng) -> Result<()> {
        match self {
            Learner::QTable { table, indexer } => {
                for s in batch {
                    let row = indexer
                        .state_index(&s.state)
                        .ok_or_else(|| Error::contract("sampled state has no table row"))?;
                    let next = indexer
                        .state_index(&s.next_state)
                        .ok_or_else(|| Error::contract("sampled state has no table row"))?;
                    let a = s
                        .action
                        .as_discrete()
                        .ok_or_else(|| Error::contract("tabular batches need discrete actions"))?;
                    let bootstrap = if s.discount == 0.0 { 0.0 } else { table.max_value(next) };
                    q_table_update_target(table, row, a, s.reward + s.discount * bootstrap, cfg.q_lr)?;
                }
                Ok(())
            }
            Learner::Ddpg {
                nets,
                actor_opt,
                critic_opt,
            } => {
                let critic_grad = ddpg_critic_loss_grad(batch, nets)?;
                dense_net_grad_step(&mut nets.critic.online, critic_opt, |_| {
                    (critic_grad.loss, critic_grad.grad)
                })?;
                let actor_grad = ddpg_actor_loss_grad(
                    batch.iter().map(|s| s.state.as_ref()),
                    &nets.actor.online,
                    &nets.critic.online,
                )?;
                dense_net_grad_step(&mut nets.actor.online, actor_opt, |_| {
                    (actor_grad.loss, actor_grad.grad)
                })?;
                nets.critic.soft_update();
                nets.actor.soft_update();
                Ok(())
            }
            Learner::Sac {
                nets,
                actor_opt,
                critic_opt,
            } => {
                let d = nets.actor.output_dim() / 2;
                let noise = SacNoise::sample(batch.len(), d, rng);
                let alpha = cfg.entropy_alpha;
                let critic_grad = sac_critic_loss_grad(batch, nets, alpha, &noise)?;
                dense_net_grad_step(&mut nets.critic.online, critic_opt, |_| {
                    (critic_grad.loss, critic_grad.grad)
                })?;
                let states: Vec<&[f64]> = batch.iter().map(|s| s.state.as_ref()).collect();
                let actor_grad =
                    sac_actor_loss_grad(&states, &nets.actor, &nets.critic.online, alpha, &noise.current)?;
                dense_net_grad_step(&mut nets.actor, actor_opt, |_| (actor_grad.loss, actor_grad.grad))?;
                nets.critic.soft_update();
                Ok(())
            }
        }
    }

    /// Flat copy of every learnable parameter, for equality checks.
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Learner::QTable { table, .. } => (0..table.num_states())
                .flat_map(|s| table.row(s).to_vec())
                .collect(),
            Learner::Ddpg { nets, .. } => [
                nets.actor.online.params(),
                nets.critic.online.params(),
            ]
            .concat(),
            Learner::Sac { nets, .. } => [nets.actor.params(), nets.critic.online.params()].concat(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nstep_examples() {
        assert!((nstep_target(&[2.0], 0.99, 10.0, false) - 11.9).abs() < 1e-12);
        assert!((nstep_target(&[1.0, 1.0, 1.0], 0.5, 8.0, false) - 2.75).abs() < 1e-12);
        assert_eq!(nstep_target(&[1.0], 0.5, 8.0, true), 1.0);
    }

    #[test]
    fn one_step_is_td_target() {
        let (r, g, v) = (0.3, 0.9, 4.0);
        assert_eq!(nstep_target(&[r], g, v, false), r + g * v);
    }

    #[test]
    fn cadence_table() {
        assert_eq!((n_step_for_kappa(1), update_every_for_kappa(1)), (6, 4));
        assert_eq!((n_step_for_kappa(2), update_every_for_kappa(2)), (3, 2));
        assert_eq!((n_step_for_kappa(4), update_every_for_kappa(4)), (2, 1));
        let c = AgentConfig::default();
        assert_eq!(c.n_step_resolved(None), 3);
        assert_eq!(c.update_every_resolved(Some(4)), 1);
    }

    #[test]
    fn defaults_validate() {
        AgentConfig::default().validate().unwrap();
        let bad = AgentConfig {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AgentConfig {
            n_step: Some(0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn learner_env_mismatch() {
        use crate::env::{EnvConfig, EnvName};
        let grid = EnvConfig::new(EnvName::SparseGoalGrid, 50).build().unwrap();
        let pm = EnvConfig::new(EnvName::PointMass, 50).build().unwrap();
        assert!(AgentConfig::with_kind(AgentKind::Ddpg).check_env(grid.as_ref()).is_err());
        assert!(AgentConfig::with_kind(AgentKind::QTable).check_env(pm.as_ref()).is_err());
        assert!(AgentConfig::with_kind(AgentKind::Sac).check_env(pm.as_ref()).is_ok());
    }
}
