//! Optimal finite-horizon returns when every decision is held for a block.

use num_bigint::BigUint;

use super::TabularMDP;
use crate::{Error, Result};

fn check_args(mdp: &TabularMDP, kappa: usize, gamma: f64) -> Result<()> {
    mdp.validate()?;
    if kappa == 0 {
        return Err(Error::config("kappa must be at least 1"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// `r_a + gamma * P_a f`, for one fixed action.
fn backup(mdp: &TabularMDP, a: usize, gamma: f64, f: &[f64]) -> Vec<f64> {
    (0..mdp.n_states)
        .map(|s| {
            let ev: f64 = mdp.transitions[s][a].iter().zip(f).map(|(p, v)| p * v).sum();
            mdp.rewards[s][a] + gamma * ev
        })
        .collect()
}

/// Best expected discounted return over policies that decide at steps
/// `0, kappa, 2 kappa, ...` and hold each action for its block (the last
/// block is cut at the horizon). Decisions see the current state.
pub fn optimal_return_under_persistence(mdp: &TabularMDP, kappa: usize, gamma: f64) -> Result<f64> {
    check_args(mdp, kappa, gamma)?;
    let h = mdp.horizon;
    let mut value = vec![0.0; mdp.n_states];
    let blocks = h.div_ceil(kappa);
    for k in (0..blocks).rev() {
        let len = kappa.min(h - k * kappa);
        let mut best = vec![f64::NEG_INFINITY; mdp.n_states];
        for a in 0..mdp.n_actions {
            let mut f = value.clone();
            for _ in 0..len {
                f = backup(mdp, a, gamma, &f);
            }
            for (b, v) in best.iter_mut().zip(f) {
                *b = b.max(v);
            }
        }
        value = best;
    }
    Ok(mdp.initial.iter().zip(&value).map(|(p, v)| p * v).sum())
}

/// Expected discounted return of a fixed open-loop action sequence
/// (`actions[t]` taken at step `t`).
pub fn sequence_return(mdp: &TabularMDP, actions: &[usize], gamma: f64) -> f64 {
    let mut dist = mdp.initial.clone();
    let mut total = 0.0;
    let mut discount = 1.0;
    for &a in actions {
        total += discount * dist.iter().enumerate().map(|(s, p)| p * mdp.rewards[s][a]).sum::<f64>();
        let mut next = vec![0.0; mdp.n_states];
        for (s, &p) in dist.iter().enumerate() {
            if p > 0.0 {
                for (n, q) in next.iter_mut().zip(&mdp.transitions[s][a]) {
                    *n += p * q;
                }
            }
        }
        dist = next;
        discount *= gamma;
    }
    total
}

/// Maximum of [`sequence_return`] over every sequence that holds each
/// action for a `kappa` block. Refuses more than `limit` sequences.
pub fn enumerate_open_loop_return(mdp: &TabularMDP, kappa: usize, gamma: f64, limit: u64) -> Result<f64> {
    check_args(mdp, kappa, gamma)?;
    let h = mdp.horizon;
    let decisions = h.div_ceil(kappa);
    let count = BigUint::from(mdp.n_actions).pow(decisions as u32);
    if count > BigUint::from(limit) {
        return Err(Error::TooLarge {
            size: usize::try_from(&count).unwrap_or(usize::MAX),
            cap: limit as usize,
        });
    }
    let count = u64::try_from(&count).expect("bounded by limit");
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; decisions];
    let mut actions = vec![0usize; h];
    for code in 0..count {
        let mut c = code;
        for d in choice.iter_mut() {
            *d = (c % mdp.n_actions as u64) as usize;
            c /= mdp.n_actions as u64;
        }
        for (t, a) in actions.iter_mut().enumerate() {
            *a = choice[t / kappa];
        }
        best = best.max(sequence_return(mdp, &actions, gamma));
    }
    if h == 0 {
        best = 0.0;
    }
    Ok(best)
}

/// Brute-force count of length-`horizon` sequences over `actions` symbols
/// that are constant within every `kappa` block.
pub fn count_repeat_structured_sequences(horizon: usize, kappa: usize, actions: usize) -> Result<u64> {
    if horizon == 0 || kappa == 0 || actions == 0 {
        return Err(Error::config("horizon, kappa and action count must all be positive"));
    }
    let total = (actions as u64)
        .checked_pow(horizon as u32)
        .filter(|&n| n <= 50_000_000)
        .ok_or_else(|| Error::config("too many sequences to enumerate"))?;
    let mut seq = vec![0usize; horizon];
    let mut count = 0;
    for code in 0..total {
        let mut c = code;
        for x in seq.iter_mut() {
            *x = (c % actions as u64) as usize;
            c /= actions as u64;
        }
        if (0..horizon).all(|t| seq[t] == seq[t - t % kappa]) {
            count += 1;
        }
    }
    Ok(count)
}

/// Infinite-horizon optimal action values by value iteration.
pub fn q_value_iteration(mdp: &TabularMDP, gamma: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
    mdp.validate()?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::config("value iteration needs gamma in [0, 1)"));
    }
    let mut v = vec![0.0; mdp.n_states];
    loop {
        let q: Vec<Vec<f64>> = (0..mdp.n_actions).map(|a| backup(mdp, a, gamma, &v)).collect();
        let next: Vec<f64> = (0..mdp.n_states)
            .map(|s| (0..mdp.n_actions).map(|a| q[a][s]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < tol * (1.0 - gamma) {
            return Ok((0..mdp.n_states).map(|s| (0..mdp.n_actions).map(|a| q[a][s]).collect()).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state(horizon: usize) -> TabularMDP {
        TabularMDP {
            n_states: 1,
            n_actions: 2,
            transitions: vec![vec![vec![1.0], vec![1.0]]],
            rewards: vec![vec![1.0, 1.0]],
            initial: vec![1.0],
            horizon,
        }
    }

    #[test]
    fn single_state_geometric_sum() {
        for kappa in 1..=3 {
            let v = optimal_return_under_persistence(&single_state(3), kappa, 0.5).unwrap();
            assert!((v - 1.75).abs() < 1e-15);
        }
    }

    #[test]
    fn one_decision_when_kappa_is_horizon() {
        let m = TabularMDP::random(4, 3, 6, 3).unwrap().determinized();
        let dp = optimal_return_under_persistence(&m, 6, 0.9).unwrap();
        let best = (0..3)
            .map(|a| sequence_return(&m, &[a; 6], 0.9))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((dp - best).abs() < 1e-12);
    }

    #[test]
    fn closed_loop_never_worse_than_open_loop() {
        for seed in 0..10 {
            let m = TabularMDP::random(3, 2, 5, seed).unwrap();
            for kappa in [1, 2, 5] {
                let dp = optimal_return_under_persistence(&m, kappa, 0.9).unwrap();
                let en = enumerate_open_loop_return(&m, kappa, 0.9, 10_000).unwrap();
                assert!(dp >= en - 1e-12);
            }
        }
    }

    #[test]
    fn brute_force_count_small_cases() {
        assert_eq!(count_repeat_structured_sequences(4, 2, 2).unwrap(), 4);
        assert_eq!(count_repeat_structured_sequences(5, 2, 3).unwrap(), 27);
        assert_eq!(count_repeat_structured_sequences(3, 1, 3).unwrap(), 27);
    }

    #[test]
    fn value_iteration_two_state_chain() {
        // State 0 --a1--> state 1 (reward 1 per step in state 1 under any action).
        let m = TabularMDP {
            n_states: 2,
            n_actions: 2,
            transitions: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            rewards: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            initial: vec![1.0, 0.0],
            horizon: 1,
        };
        let q = q_value_iteration(&m, 0.9, 1e-12).unwrap();
        assert!((q[1][0] - 10.0).abs() < 1e-9);
        assert!((q[0][1] - 9.0).abs() < 1e-9);
        assert!((q[0][0] - 8.1).abs() < 1e-9);
    }
}
