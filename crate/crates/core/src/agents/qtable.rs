//! Tabular Q-learning for discrete grids.

use serde::{Deserialize, Serialize};

use super::exploration::argmax;
use crate::{Error, Result};

/// Dense `states x actions` table of action values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Result<Self> {
        if states == 0 || actions == 0 {
            return Err(Error::config("q-table needs at least one state and one action"));
        }
        Ok(QTable {
            actions,
            values: vec![0.0; states * actions],
        })
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.num_states() || a >= self.actions {
            Err(Error::contract(format!("q-table index ({s}, {a}) out of range")))
        } else {
            Ok(())
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action; ties go to the lowest id.
    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }
}

/// `Q(s,a) += lr * (r + gamma * max_a' Q(s',a') * (1 - terminal) - Q(s,a))`.
#[allow(clippy::too_many_arguments)]
pub fn q_table_update(
    table: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    terminal: bool,
    lr: f64,
    gamma: f64,
) -> Result<()> {
    table.check(s, a)?;
    table.check(s_next, 0)?;
    let bootstrap = if terminal { 0.0 } else { table.max_value(s_next) };
    q_table_update_target(table, s, a, r + gamma * bootstrap, lr)
}

/// Moves `Q(s,a)` toward a precomputed target (n-step updates).
pub fn q_table_update_target(table: &mut QTable, s: usize, a: usize, target: f64, lr: f64) -> Result<()> {
    table.check(s, a)?;
    if !target.is_finite() {
        return Err(Error::Numerical(format!("q target is {target}")));
    }
    let q = table.get(s, a);
    table.set(s, a, q + lr * (target - q));
    Ok(())
}
