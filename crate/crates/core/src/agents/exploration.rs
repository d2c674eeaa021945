//! Behavior-action helpers shared by the learners.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::env::{Action, ActionSpec};
use crate::{Error, Result};

/// Rejection attempts before falling back to clamping.
const MAX_REJECTIONS: usize = 1000;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniform action, otherwise `argmax(q)`.
pub fn epsilon_greedy_action(q: &[f64], epsilon: f64, rng: &mut crate::Rng) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::contract("no action values"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::contract(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q.len()))
    } else {
        Ok(argmax(q))
    }
}

/// `N(0, stddev^2)` truncated to `[-clip, clip]`.
pub fn truncated_normal(stddev: f64, clip: f64, rng: &mut crate::Rng) -> f64 {
    if stddev == 0.0 || clip == 0.0 {
        return 0.0;
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let x = stddev * z;
        if x.abs() <= clip {
            return x;
        }
    }
    let z: f64 = StandardNormal.sample(rng);
    (stddev * z).clamp(-clip, clip)
}

/// `clip(mean + noise, low, high)` with truncated Gaussian noise per coordinate.
pub fn gaussian_behavior_action(
    mean: &[f64],
    stddev: f64,
    clip: f64,
    spec: &ActionSpec,
    rng: &mut crate::Rng,
) -> Result<Action> {
    if stddev < 0.0 || clip < 0.0 {
        return Err(Error::contract("noise scale must be non-negative"));
    }
    if spec.is_discrete() || spec.dim() != mean.len() {
        return Err(Error::contract("mean does not match the continuous action space"));
    }
    let a = mean
        .iter()
        .map(|&m| m + truncated_normal(stddev, clip, rng))
        .collect();
    Ok(spec.clamp(Action::Continuous(a)))
}
