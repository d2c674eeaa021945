//! Brute-force reference computations: exact occupancy of repeat-structured
//! random walks and optimal returns under action persistence.

mod planning;
mod visitation;

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::env::grid_step;
use crate::{seeded_rng, Error, Result};

pub use planning::{
    count_repeat_structured_sequences, enumerate_open_loop_return, optimal_return_under_persistence,
    q_value_iteration, sequence_return,
};
pub use visitation::{exact_visitation, OracleStrategy, Visitation, DEFAULT_AUGMENTED_CAP};

/// Finite MDP with horizon; `transitions[s][a][s']`, `rewards[s][a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularMDP {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub horizon: usize,
}

fn check_distribution(p: &[f64], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::config(format!("{what} has {} entries, expected {n}", p.len())));
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::config(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::config(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Flat-simplex draw: normalized unit exponentials.
fn flat_simplex(n: usize, rng: &mut crate::Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

fn one_hot_argmax(p: &[f64]) -> Vec<f64> {
    let i = crate::agents::exploration::argmax(p);
    let mut v = vec![0.0; p.len()];
    v[i] = 1.0;
    v
}

impl TabularMDP {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::config("mdp needs at least one state and one action"));
        }
        if self.transitions.len() != self.n_states || self.rewards.len() != self.n_states {
            return Err(Error::config("transition and reward tables need one row per state"));
        }
        for s in 0..self.n_states {
            if self.transitions[s].len() != self.n_actions || self.rewards[s].len() != self.n_actions {
                return Err(Error::config(format!("state {s} needs one entry per action")));
            }
            for a in 0..self.n_actions {
                check_distribution(&self.transitions[s][a], self.n_states, &format!("P[{s}][{a}]"))?;
                if !self.rewards[s][a].is_finite() {
                    return Err(Error::config(format!("R[{s}][{a}] is not finite")));
                }
            }
        }
        check_distribution(&self.initial, self.n_states, "initial distribution")
    }

    /// Random instance: flat-simplex transition rows and initial
    /// distribution, rewards uniform on `[0, 1]`.
    pub fn random(n_states: usize, n_actions: usize, horizon: usize, seed: u64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::config("mdp needs at least one state and one action"));
        }
        let mut rng = seeded_rng(seed);
        let transitions = (0..n_states)
            .map(|_| (0..n_actions).map(|_| flat_simplex(n_states, &mut rng)).collect())
            .collect();
        let rewards = (0..n_states)
            .map(|_| (0..n_actions).map(|_| rng.random::<f64>()).collect())
            .collect();
        let initial = flat_simplex(n_states, &mut rng);
        Ok(TabularMDP {
            n_states,
            n_actions,
            transitions,
            rewards,
            initial,
            horizon,
        })
    }

    /// Deterministic counterpart: every row and the initial distribution
    /// collapse onto their most likely state.
    pub fn determinized(&self) -> Self {
        TabularMDP {
            transitions: self
                .transitions
                .iter()
                .map(|row| row.iter().map(|p| one_hot_argmax(p)).collect())
                .collect(),
            initial: one_hot_argmax(&self.initial),
            ..self.clone()
        }
    }

    /// Reward-free `size x size` grid started at `start`; state index
    /// `y * size + x`, actions up/down/left/right.
    pub fn grid(size: usize, start: (i64, i64), horizon: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::config("grid size must be positive"));
        }
        let n = size * size;
        let idx = |(x, y): (i64, i64)| (y as usize) * size + x as usize;
        if start.0 < 0 || start.1 < 0 || start.0 as usize >= size || start.1 as usize >= size {
            return Err(Error::config(format!("start {start:?} is off the grid")));
        }
        let mut transitions = vec![vec![vec![0.0; n]; 4]; n];
        for y in 0..size as i64 {
            for x in 0..size as i64 {
                for a in 0..4 {
                    let next = grid_step(size as i64, (x, y), a)?;
                    transitions[idx((x, y))][a][idx(next)] = 1.0;
                }
            }
        }
        let mut initial = vec![0.0; n];
        initial[idx(start)] = 1.0;
        Ok(TabularMDP {
            n_states: n,
            n_actions: 4,
            transitions,
            rewards: vec![vec![0.0; 4]; n],
            initial,
            horizon,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mdp: TabularMDP = serde_json::from_str(text)?;
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mdp: TabularMDP = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
