use rand::Rng as _;

use super::{Action, ActionSpec, Environment, EpisodeStatus, RewardSpec, StateVec, Step};
use crate::{Error, Result};

/// Integration step of the point-mass.
pub const POINT_MASS_DT: f64 = 0.05;
const ARENA: f64 = 1.0;
const START: [f64; 2] = [-0.5, -0.5];
const GOAL_RADIUS: f64 = 0.05;

/// 2-D double integrator in the box `[-1, 1]^2`.
///
/// State is `(px, py, vx, vy)`. The action is a force clipped to `[-1, 1]^2`;
/// velocity integrates first, then position (semi-implicit Euler). Hitting a
/// wall clamps the position and zeroes that velocity component.
///
/// `Dense` pays `-|p - goal|`; `SparseGoal` pays 1 and terminates inside a
/// radius of 0.05 around the goal; `None` pays nothing.
#[derive(Clone, Debug)]
pub struct PointMass {
    goal: [f64; 2],
    start_noise: f64,
    reward: RewardSpec,
    episode_length: usize,
    spec: ActionSpec,
    rng: crate::Rng,
    state: [f64; 4],
    steps: usize,
    status: EpisodeStatus,
}

impl PointMass {
    pub fn new(
        goal: [f64; 2],
        start_noise: f64,
        reward: RewardSpec,
        episode_length: usize,
        seed: u64,
    ) -> Result<Self> {
        if goal.iter().any(|g| !g.is_finite() || g.abs() > ARENA) {
            return Err(Error::config("point-mass goal must lie inside [-1, 1]^2"));
        }
        if !(0.0..=0.5).contains(&start_noise) {
            return Err(Error::config("point-mass start_noise must be in [0, 0.5]"));
        }
        if episode_length == 0 {
            return Err(Error::config("episode_length must be at least 1"));
        }
        Ok(PointMass {
            goal,
            start_noise,
            reward,
            episode_length,
            spec: ActionSpec::Continuous {
                low: vec![-1.0; 2],
                high: vec![1.0; 2],
            },
            rng: crate::seeded_rng(seed),
            state: [START[0], START[1], 0.0, 0.0],
            steps: 0,
            status: EpisodeStatus::NotReset,
        })
    }

    fn distance_to_goal(&self) -> f64 {
        (self.state[0] - self.goal[0]).hypot(self.state[1] - self.goal[1])
    }
}

impl Environment for PointMass {
    fn action_spec(&self) -> &ActionSpec {
        &self.spec
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self) -> StateVec {
        let mut p = START;
        if self.start_noise > 0.0 {
            for x in &mut p {
                *x += self.rng.random_range(-self.start_noise..=self.start_noise);
            }
        }
        self.state = [p[0], p[1], 0.0, 0.0];
        self.steps = 0;
        self.status = EpisodeStatus::Running;
        StateVec(self.state.to_vec())
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        self.status.check_steppable()?;
        let force = match action {
            Action::Continuous(f) if f.len() == 2 && f.iter().all(|x| x.is_finite()) => {
                [f[0].clamp(-1.0, 1.0), f[1].clamp(-1.0, 1.0)]
            }
            _ => return Err(Error::contract(format!("point-mass expects a finite 2-vector, got {action}"))),
        };
        for d in 0..2 {
            self.state[d + 2] += force[d] * POINT_MASS_DT;
            self.state[d] += self.state[d + 2] * POINT_MASS_DT;
            if self.state[d].abs() > ARENA {
                self.state[d] = self.state[d].clamp(-ARENA, ARENA);
                self.state[d + 2] = 0.0;
            }
        }
        self.steps += 1;
        let dist = self.distance_to_goal();
        let (reward, goal) = match self.reward {
            RewardSpec::None => (0.0, false),
            RewardSpec::Dense => (-dist, false),
            RewardSpec::SparseGoal => {
                let hit = dist < GOAL_RADIUS;
                (if hit { 1.0 } else { 0.0 }, hit)
            }
        };
        let terminal = goal || self.steps >= self.episode_length;
        if terminal {
            self.status = EpisodeStatus::Done;
        }
        Ok(Step {
            next_state: StateVec(self.state.to_vec()),
            reward,
            terminal,
            truncated: terminal && !goal,
        })
    }
}
