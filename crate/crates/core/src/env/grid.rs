use super::{Action, ActionSpec, Environment, EpisodeStatus, RewardSpec, StateVec, Step};
use crate::{Error, Result};

/// Side length of the coverage mini-grid.
pub const MINIGRID_SIZE: i64 = 51;
/// Start and reset cell of the mini-grid.
pub const MINIGRID_CENTER: (i64, i64) = (25, 25);

/// Grid moves. `x` is the column, `y` the row; `Up` increments `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GridAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::contract(format!("invalid grid action id {index}; expected 0..4")))
    }

    fn delta(self) -> (i64, i64) {
        match self {
            GridAction::Up => (0, 1),
            GridAction::Down => (0, -1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
        }
    }
}

/// One move on a `size x size` grid. A move that would leave the grid keeps
/// the agent in place; each axis is clamped independently.
pub fn grid_step(size: i64, pos: (i64, i64), action: usize) -> Result<(i64, i64)> {
    let (dx, dy) = GridAction::from_index(action)?.delta();
    let (x, y) = (pos.0 + dx, pos.1 + dy);
    if (0..size).contains(&x) && (0..size).contains(&y) {
        Ok((x, y))
    } else {
        Ok(pos)
    }
}

/// [`grid_step`] on the 51x51 mini-grid.
pub fn minigrid_step(pos: (i64, i64), action: usize) -> Result<(i64, i64)> {
    grid_step(MINIGRID_SIZE, pos, action)
}

/// Square grid world with four moves, a fixed start cell and an optional goal.
///
/// Rewards: `None` always 0. `SparseGoal` pays 1 on entering the goal and ends
/// the episode there. `Dense` pays minus the Manhattan distance to the goal,
/// scaled by the grid diameter, and also terminates at the goal.
#[derive(Clone, Debug)]
pub struct GridWorld {
    size: i64,
    start: (i64, i64),
    goal: Option<(i64, i64)>,
    reward: RewardSpec,
    episode_length: usize,
    spec: ActionSpec,
    pos: (i64, i64),
    steps: usize,
    status: EpisodeStatus,
}

impl GridWorld {
    pub fn new(
        size: usize,
        start: (i64, i64),
        goal: Option<(i64, i64)>,
        reward: RewardSpec,
        episode_length: usize,
    ) -> Result<Self> {
        if size < 1 {
            return Err(Error::config("grid size must be positive"));
        }
        if episode_length == 0 {
            return Err(Error::config("episode_length must be at least 1"));
        }
        let n = size as i64;
        let inside = |(x, y): (i64, i64)| (0..n).contains(&x) && (0..n).contains(&y);
        if !inside(start) {
            return Err(Error::config(format!("start {start:?} outside a {size}x{size} grid")));
        }
        if let Some(g) = goal {
            if !inside(g) {
                return Err(Error::config(format!("goal {g:?} outside a {size}x{size} grid")));
            }
        }
        if reward != RewardSpec::None && goal.is_none() {
            return Err(Error::config("rewarded grid needs a goal cell"));
        }
        Ok(GridWorld {
            size: n,
            start,
            goal,
            reward,
            episode_length,
            spec: ActionSpec::Discrete { count: 4 },
            pos: start,
            steps: 0,
            status: EpisodeStatus::NotReset,
        })
    }

    /// The reward-free 51x51 coverage grid, reset to its center.
    pub fn mini_grid(episode_length: usize) -> Self {
        Self::new(
            MINIGRID_SIZE as usize,
            MINIGRID_CENTER,
            None,
            RewardSpec::None,
            episode_length.max(1),
        )
        .expect("mini-grid parameters are valid")
    }

    /// Goal cell used when a sparse-goal grid config names none.
    pub fn default_goal(size: usize) -> (i64, i64) {
        let n = size as i64;
        ((n * 4) / 5, (n * 9) / 10)
    }

    pub fn size(&self) -> i64 {
        self.size
    }

    pub fn start(&self) -> (i64, i64) {
        self.start
    }

    pub fn goal(&self) -> Option<(i64, i64)> {
        self.goal
    }

    pub fn position(&self) -> (i64, i64) {
        self.pos
    }

    pub fn cell_index(&self, (x, y): (i64, i64)) -> usize {
        (y * self.size + x) as usize
    }

    pub fn to_state(pos: (i64, i64)) -> StateVec {
        StateVec(vec![pos.0 as f64, pos.1 as f64])
    }

    pub fn from_state(&self, state: &StateVec) -> Option<(i64, i64)> {
        if state.dim() != 2 {
            return None;
        }
        let (x, y) = (state[0], state[1]);
        if x.fract() != 0.0 || y.fract() != 0.0 {
            return None;
        }
        let p = (x as i64, y as i64);
        ((0..self.size).contains(&p.0) && (0..self.size).contains(&p.1)).then_some(p)
    }

    fn reward_at(&self, pos: (i64, i64)) -> (f64, bool) {
        let at_goal = self.goal == Some(pos);
        match self.reward {
            RewardSpec::None => (0.0, false),
            RewardSpec::SparseGoal => (if at_goal { 1.0 } else { 0.0 }, at_goal),
            RewardSpec::Dense => {
                let g = self.goal.expect("validated at construction");
                let d = (pos.0 - g.0).abs() + (pos.1 - g.1).abs();
                (-(d as f64) / (2 * (self.size - 1)).max(1) as f64, at_goal)
            }
        }
    }
}

impl Environment for GridWorld {
    fn action_spec(&self) -> &ActionSpec {
        &self.spec
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self) -> StateVec {
        self.pos = self.start;
        self.steps = 0;
        self.status = EpisodeStatus::Running;
        Self::to_state(self.pos)
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        self.status.check_steppable()?;
        let a = action
            .as_discrete()
            .ok_or_else(|| Error::contract("grid actions are discrete"))?;
        self.pos = grid_step(self.size, self.pos, a)?;
        self.steps += 1;
        let (reward, goal) = self.reward_at(self.pos);
        let out_of_time = self.steps >= self.episode_length;
        let terminal = goal || out_of_time;
        if terminal {
            self.status = EpisodeStatus::Done;
        }
        Ok(Step {
            next_state: Self::to_state(self.pos),
            reward,
            terminal,
            truncated: terminal && !goal,
        })
    }

    fn num_states(&self) -> Option<usize> {
        Some((self.size * self.size) as usize)
    }

    fn state_index(&self, state: &StateVec) -> Option<usize> {
        self.from_state(state).map(|p| self.cell_index(p))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;

    #[test]
    fn reset_goes_to_center() {
        let mut g = GridWorld::mini_grid(20);
        assert_eq!(g.reset(), StateVec(vec![25.0, 25.0]));
        assert_eq!(g.reset(), StateVec(vec![25.0, 25.0]));
        for _ in 0..7 {
            g.step(&Action::Discrete(3)).unwrap();
        }
        assert_eq!(g.reset(), StateVec(vec![25.0, 25.0]));
        assert_eq!(g.position(), (25, 25));
    }

    #[test]
    fn boundary_moves() {
        assert_eq!(minigrid_step((0, 10), GridAction::Left as usize).unwrap(), (0, 10));
        assert_eq!(minigrid_step((25, 25), GridAction::Up as usize).unwrap(), (25, 26));
        assert_eq!(minigrid_step((50, 0), GridAction::Down as usize).unwrap(), (50, 0));
        assert_eq!(minigrid_step((50, 0), GridAction::Left as usize).unwrap(), (49, 0));
        assert!(minigrid_step((3, 3), 4).is_err());
    }

    #[test]
    fn closure_over_all_cells() {
        for x in 0..MINIGRID_SIZE {
            for y in 0..MINIGRID_SIZE {
                for a in 0..4 {
                    let (nx, ny) = minigrid_step((x, y), a).unwrap();
                    assert!((0..MINIGRID_SIZE).contains(&nx) && (0..MINIGRID_SIZE).contains(&ny));
                    assert_eq!((nx - x).abs() + (ny - y).abs() <= 1, true);
                }
            }
        }
    }

    #[test]
    fn every_cell_reachable_within_100_steps() {
        let n = MINIGRID_SIZE;
        let mut dist = vec![usize::MAX; (n * n) as usize];
        let idx = |(x, y): (i64, i64)| (y * n + x) as usize;
        let mut queue = VecDeque::from([MINIGRID_CENTER]);
        dist[idx(MINIGRID_CENTER)] = 0;
        while let Some(p) = queue.pop_front() {
            for a in 0..4 {
                let q = minigrid_step(p, a).unwrap();
                if dist[idx(q)] == usize::MAX {
                    dist[idx(q)] = dist[idx(p)] + 1;
                    queue.push_back(q);
                }
            }
        }
        assert!(dist.iter().all(|&d| d <= 100));
        assert_eq!(*dist.iter().max().unwrap(), 50);
    }

    #[test]
    fn coverage_mode_is_reward_free_and_counts_actions() {
        let mut g = GridWorld::mini_grid(20);
        g.reset();
        for i in 1..=20 {
            let s = g.step(&Action::Discrete(i % 4)).unwrap();
            assert_eq!(s.reward, 0.0);
            assert_eq!(s.terminal, i == 20);
        }
        assert!(g.step(&Action::Discrete(0)).is_err());
    }

    #[test]
    fn stepping_before_reset_fails() {
        let mut g = GridWorld::mini_grid(20);
        assert!(matches!(g.step(&Action::Discrete(0)), Err(Error::EnvState(_))));
        g.reset();
        assert!(matches!(g.step(&Action::Discrete(9)), Err(Error::Contract(_))));
        assert!(g.step(&Action::Continuous(vec![0.0])).is_err());
    }

    #[test]
    fn sparse_goal_pays_and_terminates() {
        let mut g = GridWorld::new(5, (2, 2), Some((2, 3)), RewardSpec::SparseGoal, 10).unwrap();
        g.reset();
        let s = g.step(&Action::Discrete(GridAction::Down as usize)).unwrap();
        assert_eq!((s.reward, s.terminal), (0.0, false));
        g.step(&Action::Discrete(GridAction::Up as usize)).unwrap();
        let s = g.step(&Action::Discrete(GridAction::Up as usize)).unwrap();
        assert_eq!((s.reward, s.terminal, s.truncated), (1.0, true, false));
    }

    #[test]
    fn state_index_round_trip() {
        let g = GridWorld::mini_grid(20);
        assert_eq!(g.state_index(&StateVec(vec![3.0, 2.0])), Some(2 * 51 + 3));
        assert_eq!(g.state_index(&StateVec(vec![3.5, 2.0])), None);
        assert_eq!(g.state_index(&StateVec(vec![51.0, 2.0])), None);
    }
}
