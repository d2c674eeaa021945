//! Deterministic-policy and entropy-regularized actor-critic losses with
//! analytic gradients.

use super::net::{Mlp, TargetPair};
use super::replay::NStepSample;
use crate::{Error, Result};

/// Bounds of the policy's log standard deviation.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn action_vec(s: &NStepSample) -> Result<&[f64]> {
    s.action
        .as_continuous()
        .ok_or_else(|| Error::contract("actor-critic batches need continuous actions"))
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numerical(format!("{what} is {x}")))
    }
}

/// A differentiable action-value function `Q(s, a)`.
pub trait ActionValue {
    /// `Q(s, a)` and `dQ/da`.
    fn value_and_action_grad(&self, state: &[f64], action: &[f64]) -> (f64, Vec<f64>);
}

impl ActionValue for Mlp {
    fn value_and_action_grad(&self, state: &[f64], action: &[f64]) -> (f64, Vec<f64>) {
        let c = self.forward_cached(&concat(state, action));
        let mut scratch = vec![0.0; self.num_params()];
        let d = self.backward(&c, &[1.0], &mut scratch);
        (c.output()[0], d[state.len()..].to_vec())
    }
}

impl<F> ActionValue for F
where
    F: Fn(&[f64], &[f64]) -> (f64, Vec<f64>),
{
    fn value_and_action_grad(&self, state: &[f64], action: &[f64]) -> (f64, Vec<f64>) {
        self(state, action)
    }
}

/// Loss value together with its gradient over one network's parameters.
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Deterministic actor and critic, each with a target copy.
#[derive(Clone, Debug)]
pub struct DdpgNets {
    pub actor: TargetPair,
    pub critic: TargetPair,
}

/// Mean squared TD error of `critic` against fixed targets `ys`.
fn critic_regression(batch: &[NStepSample], critic: &Mlp, ys: &[f64]) -> Result<LossGrad> {
    let b = batch.len() as f64;
    let mut grad = vec![0.0; critic.num_params()];
    let mut loss = 0.0;
    for (s, &y) in batch.iter().zip(ys) {
        let c = critic.forward_cached(&concat(&s.state, action_vec(s)?));
        let err = c.output()[0] - y;
        loss += err * err / b;
        critic.backward(&c, &[2.0 * err / b], &mut grad);
    }
    Ok(LossGrad {
        loss: finite(loss, "critic loss")?,
        grad,
    })
}

fn check_batch(batch: &[NStepSample]) -> Result<()> {
    if batch.is_empty() {
        Err(Error::contract("loss needs a non-empty batch"))
    } else {
        Ok(())
    }
}

/// Critic loss with target action `mu_target(s')` and target critic.
pub fn ddpg_critic_loss_grad(batch: &[NStepSample], nets: &DdpgNets) -> Result<LossGrad> {
    check_batch(batch)?;
    let ys: Vec<f64> = batch
        .iter()
        .map(|s| {
            let a_next = nets.actor.target.forward(&s.next_state);
            let q_next = nets.critic.target.forward(&concat(&s.next_state, &a_next))[0];
            s.reward + s.discount * q_next
        })
        .collect();
    critic_regression(batch, &nets.critic.online, &ys)
}

/// `-mean Q(s, mu(s))` and its gradient with respect to the actor.
pub fn ddpg_actor_loss_grad<'a, I>(states: I, actor: &Mlp, critic: &dyn ActionValue) -> Result<LossGrad>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let states: Vec<&[f64]> = states.into_iter().collect();
    if states.is_empty() {
        return Err(Error::contract("loss needs a non-empty batch"));
    }
    let b = states.len() as f64;
    let mut grad = vec![0.0; actor.num_params()];
    let mut loss = 0.0;
    for s in states {
        let ac = actor.forward_cached(s);
        let (q, dq) = critic.value_and_action_grad(s, ac.output());
        loss -= q / b;
        let d_action: Vec<f64> = dq.iter().map(|g| -g / b).collect();
        actor.backward(&ac, &d_action, &mut grad);
    }
    Ok(LossGrad {
        loss: finite(loss, "actor loss")?,
        grad,
    })
}

/// `(critic_loss, actor_loss)` of the deterministic actor-critic.
pub fn ddpg_losses(batch: &[NStepSample], nets: &DdpgNets) -> Result<(f64, f64)> {
    let critic = ddpg_critic_loss_grad(batch, nets)?;
    let actor = ddpg_actor_loss_grad(
        batch.iter().map(|s| s.state.as_ref()),
        &nets.actor.online,
        &nets.critic.online,
    )?;
    Ok((critic.loss, actor.loss))
}

/// Stochastic actor (mean and raw log-std heads) and a critic with a target copy.
#[derive(Clone, Debug)]
pub struct SacNets {
    pub actor: Mlp,
    pub critic: TargetPair,
}

/// Standard-normal draws used for the reparameterized actions of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct SacNoise {
    /// One vector per sample, for actions at `s`.
    pub current: Vec<Vec<f64>>,
    /// One vector per sample, for actions at `s'`.
    pub next: Vec<Vec<f64>>,
}

impl SacNoise {
    pub fn sample(batch: usize, action_dim: usize, rng: &mut crate::Rng) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut draw = || -> Vec<Vec<f64>> {
            (0..batch)
                .map(|_| (0..action_dim).map(|_| StandardNormal.sample(rng)).collect())
                .collect()
        };
        let current = draw();
        let next = draw();
        SacNoise { current, next }
    }

    pub fn zeros(batch: usize, action_dim: usize) -> Self {
        SacNoise {
            current: vec![vec![0.0; action_dim]; batch],
            next: vec![vec![0.0; action_dim]; batch],
        }
    }
}

/// Log density of `N(mean, std^2)` at `x`.
pub fn gaussian_log_density(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - HALF_LOG_TWO_PI
}

/// `log(1 - tanh(u)^2)`, stable for large `|u|`.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    // 2 * (ln 2 - u - softplus(-2u))
    let softplus = |x: f64| if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// A reparameterized draw `a = tanh(mean + std * eps)` from the policy.
#[derive(Clone, Debug)]
pub struct PolicySample {
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pre_tanh: Vec<f64>,
    raw_log_std: Vec<f64>,
}

/// Maps the raw head into `[LOG_STD_MIN, LOG_STD_MAX]` smoothly.
fn squash_log_std(raw: f64) -> f64 {
    LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (raw.tanh() + 1.0)
}

/// Evaluates the squashed Gaussian policy at `state` with fixed `noise`.
pub fn policy_sample(actor: &Mlp, state: &[f64], noise: &[f64]) -> PolicySample {
    policy_sample_from(&actor.forward(state), noise)
}

fn policy_sample_from(out: &[f64], noise: &[f64]) -> PolicySample {
    let d = out.len() / 2;
    assert_eq!(noise.len(), d, "noise dimension");
    let mean = out[..d].to_vec();
    let raw_log_std = out[d..].to_vec();
    let log_std: Vec<f64> = raw_log_std.iter().map(|&r| squash_log_std(r)).collect();
    let mut log_prob = 0.0;
    let mut pre_tanh = Vec::with_capacity(d);
    let mut action = Vec::with_capacity(d);
    for i in 0..d {
        let std = log_std[i].exp();
        let u = mean[i] + std * noise[i];
        log_prob += gaussian_log_density(u, mean[i], std) - log_one_minus_tanh_sq(u);
        pre_tanh.push(u);
        action.push(u.tanh());
    }
    PolicySample {
        action,
        log_prob,
        mean,
        log_std,
        pre_tanh,
        raw_log_std,
    }
}

/// Critic loss with target `r + discount * (Q_target(s', a') - alpha * log pi(a'|s'))`,
/// `a' ~ pi(s')` drawn with `noise.next`.
pub fn sac_critic_loss_grad(
    batch: &[NStepSample],
    nets: &SacNets,
    alpha: f64,
    noise: &SacNoise,
) -> Result<LossGrad> {
    check_batch(batch)?;
    let ys: Vec<f64> = batch
        .iter()
        .zip(&noise.next)
        .map(|(s, eps)| {
            let p = policy_sample(&nets.actor, &s.next_state, eps);
            let q_next = nets.critic.target.forward(&concat(&s.next_state, &p.action))[0];
            s.reward + s.discount * (q_next - alpha * p.log_prob)
        })
        .collect();
    critic_regression(batch, &nets.critic.online, &ys)
}

/// `mean[alpha * log pi(a|s) - Q(s, a)]` with `a` reparameterized by `noise`,
/// and its gradient with respect to the actor.
pub fn sac_actor_loss_grad(
    states: &[&[f64]],
    actor: &Mlp,
    critic: &dyn ActionValue,
    alpha: f64,
    noise: &[Vec<f64>],
) -> Result<LossGrad> {
    if states.is_empty() {
        return Err(Error::contract("loss needs a non-empty batch"));
    }
    let b = states.len() as f64;
    if noise.len() != states.len() {
        return Err(Error::contract("one noise vector per state is required"));
    }
    let mut grad = vec![0.0; actor.num_params()];
    let mut loss = 0.0;
    for (s, eps) in states.iter().zip(noise) {
        let ac = actor.forward_cached(s);
        let p = policy_sample_from(ac.output(), eps);
        let (q, dq) = critic.value_and_action_grad(s, &p.action);
        loss += (alpha * p.log_prob - q) / b;
        let d = p.action.len();
        let mut d_out = vec![0.0; 2 * d];
        for i in 0..d {
            let a = p.action[i];
            // d/du of the tanh correction -log(1 - tanh(u)^2) is 2 tanh(u).
            let d_u = -dq[i] / b * (1.0 - a * a) + alpha * 2.0 * a / b;
            let std = p.log_std[i].exp();
            let d_log_std = d_u * std * eps[i] - alpha / b;
            let t = p.raw_log_std[i].tanh();
            d_out[i] = d_u;
            d_out[d + i] = d_log_std * 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (1.0 - t * t);
            debug_assert!((p.pre_tanh[i] - (p.mean[i] + std * eps[i])).abs() < 1e-12);
        }
        actor.backward(&ac, &d_out, &mut grad);
    }
    Ok(LossGrad {
        loss: finite(loss, "actor loss")?,
        grad,
    })
}

/// `(critic_loss, actor_loss)` of the entropy-regularized actor-critic.
pub fn sac_losses(
    batch: &[NStepSample],
    nets: &SacNets,
    alpha: f64,
    noise: &SacNoise,
) -> Result<(f64, f64)> {
    let critic = sac_critic_loss_grad(batch, nets, alpha, noise)?;
    let states: Vec<&[f64]> = batch.iter().map(|s| s.state.as_ref()).collect();
    let actor = sac_actor_loss_grad(&states, &nets.actor, &nets.critic.online, alpha, &noise.current)?;
    Ok((critic.loss, actor.loss))
}
