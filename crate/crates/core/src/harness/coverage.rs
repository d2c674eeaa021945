//! Reward-free coverage experiments on the mini-grid, and a Monte-Carlo
//! occupancy estimator used to check the exact oracle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::mean_stderr;
use crate::env::{Action, ActionSpec, Environment, GridWorld, RewardSpec, StateVec, MINIGRID_SIZE};
use crate::novelty::{CounterKind, NoveltyConfig, NoveltyEstimator};
use crate::persistence::{ActionSource, Persistence, PersistenceState, PersistenceStrategy, DEFAULT_ZETA_MU};
use crate::{derive_seed, seeded_rng, Error, Result, Rng};

/// Behavior processes compared in coverage runs; the target policy is
/// always uniform random.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoverageStrategy {
    Random,
    RandomZeta { mu: f64 },
    /// Repeat with probability `alpha / max(1, sqrt(N(s)))`, counts updated
    /// on every visit.
    CountRepeat { alpha: f64 },
}

impl CoverageStrategy {
    pub fn persistence(&self) -> PersistenceStrategy {
        match *self {
            CoverageStrategy::Random => PersistenceStrategy::None,
            CoverageStrategy::RandomZeta { mu } => PersistenceStrategy::random_zeta(mu),
            CoverageStrategy::CountRepeat { alpha } => PersistenceStrategy::snap(alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoverageStrategy::Random => "random",
            CoverageStrategy::RandomZeta { .. } => "random-zeta",
            CoverageStrategy::CountRepeat { .. } => "count-repeat",
        }
    }
}

impl fmt::Display for CoverageStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverageStrategy {
    type Err = Error;

    /// `random`, `zeta` / `random-zeta` (mu = 2) or `count` / `count-repeat` / `snap` (alpha = 1).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(CoverageStrategy::Random),
            "zeta" | "random-zeta" => Ok(CoverageStrategy::RandomZeta { mu: DEFAULT_ZETA_MU }),
            "count" | "count-repeat" | "snap" => Ok(CoverageStrategy::CountRepeat { alpha: 1.0 }),
            other => Err(Error::config(format!(
                "unknown coverage strategy {other:?}; expected random, zeta or count"
            ))),
        }
    }
}

/// Uniform target policy.
struct UniformSource<'a> {
    spec: &'a ActionSpec,
    rng: &'a mut Rng,
}

impl ActionSource for UniformSource<'_> {
    fn target_action(&mut self, _: &StateVec) -> Action {
        self.spec.sample_uniform(self.rng)
    }

    fn greedy_action(&mut self, _: &StateVec) -> Action {
        self.spec.sample_uniform(self.rng)
    }

    fn random_action(&mut self) -> Action {
        self.spec.sample_uniform(self.rng)
    }
}

/// Everything beyond the strategy that a coverage experiment needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageOptions {
    pub episode_length: usize,
    pub total_steps: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub grid_size: usize,
    /// Counter used by count-repeat.
    pub novelty: NoveltyConfig,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        CoverageOptions {
            episode_length: 20,
            total_steps: 1000,
            runs: 30,
            base_seed: 0,
            grid_size: MINIGRID_SIZE as usize,
            novelty: NoveltyConfig::with_counter(CounterKind::Tabular),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunCoverage {
    pub run_id: usize,
    pub seed: u64,
    pub coverage_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub strategy: String,
    pub episode_length: usize,
    pub total_steps: usize,
    pub grid_size: usize,
    pub runs: Vec<RunCoverage>,
    /// Visited-cell bitmap of each run, indexed `y * size + x`.
    pub bitmaps: Vec<Vec<bool>>,
    pub mean: f64,
    pub stderr: f64,
    /// Mean over runs of each cell's share of all visits.
    pub visit_frequency: Vec<f64>,
    pub warnings: Vec<String>,
}

impl CoverageResult {
    /// `run_id,seed,coverage_percent` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run_id,seed,coverage_percent\n");
        for r in &self.runs {
            out.push_str(&format!("{},{},{}\n", r.run_id, r.seed, r.coverage_percent));
        }
        out
    }
}

/// `100 * visited / cells`.
pub fn coverage_percent(bitmap: &[bool]) -> Result<f64> {
    if bitmap.is_empty() {
        return Err(Error::contract("empty coverage bitmap"));
    }
    Ok(100.0 * bitmap.iter().filter(|&&b| b).count() as f64 / bitmap.len() as f64)
}

/// Coverage on the 51x51 grid with the default counter.
pub fn run_coverage(
    strategy: CoverageStrategy,
    episode_length: usize,
    total_steps: usize,
    runs: usize,
    base_seed: u64,
) -> Result<CoverageResult> {
    run_coverage_with(
        strategy,
        &CoverageOptions {
            episode_length,
            total_steps,
            runs,
            base_seed,
            ..Default::default()
        },
    )
}

fn single_run(strategy: CoverageStrategy, opts: &CoverageOptions, seed: u64) -> Result<Vec<u64>> {
    let size = opts.grid_size;
    let c = (size as i64 - 1) / 2;
    let mut env = GridWorld::new(size, (c, c), None, RewardSpec::None, opts.episode_length)?;
    let spec = env.action_spec().clone();
    let persistence = Persistence::new(strategy.persistence())?;
    let mut novelty: Option<NoveltyEstimator> = match strategy {
        CoverageStrategy::CountRepeat { .. } => {
            let n = size as f64;
            let half = ((n - 1.0) / 2.0).max(0.5);
            Some(opts.novelty.build(2, Some((vec![half; 2], vec![half; 2])), derive_seed(seed, 3))?)
        }
        _ => None,
    };
    let mut action_rng = seeded_rng(derive_seed(seed, 1));
    let mut persist_rng = seeded_rng(derive_seed(seed, 2));
    let mut pstate = PersistenceState::new();
    let mut visits = vec![0u64; size * size];
    let mut visit = |s: &StateVec, novelty: &mut Option<NoveltyEstimator>| -> Result<()> {
        visits[env_index(size, s)] += 1;
        if let Some(n) = novelty.as_mut() {
            n.record_visit(s)?;
        }
        Ok(())
    };
    let mut steps = 0;
    while steps < opts.total_steps {
        let mut state = env.reset();
        pstate.reset();
        visit(&state, &mut novelty)?;
        loop {
            let mut source = UniformSource {
                spec: &spec,
                rng: &mut action_rng,
            };
            let d = persistence.behavior_step(
                &mut pstate,
                &state,
                steps as u64,
                &mut source,
                novelty.as_ref(),
                &mut persist_rng,
            )?;
            let step = env.step(&d.action)?;
            visit(&step.next_state, &mut novelty)?;
            steps += 1;
            if step.terminal || steps >= opts.total_steps {
                break;
            }
            state = step.next_state;
        }
    }
    Ok(visits)
}

fn env_index(size: usize, s: &StateVec) -> usize {
    s[1] as usize * size + s[0] as usize
}

/// Coverage of `opts.runs` independent runs, each with a seed derived from
/// `opts.base_seed` and its run id. Runs execute in parallel; results do
/// not depend on scheduling.
pub fn run_coverage_with(strategy: CoverageStrategy, opts: &CoverageOptions) -> Result<CoverageResult> {
    if opts.runs == 0 || opts.episode_length == 0 || opts.total_steps == 0 {
        return Err(Error::config("runs, episode_length and total_steps must be positive"));
    }
    if opts.grid_size == 0 {
        return Err(Error::config("grid_size must be positive"));
    }
    strategy.persistence().validate()?;
    let mut warnings = Vec::new();
    if opts.total_steps % opts.episode_length != 0 {
        warnings.push(format!(
            "total_steps {} is not a multiple of episode_length {}; the last episode is partial",
            opts.total_steps, opts.episode_length
        ));
    }
    let seeds: Vec<u64> = (0..opts.runs).map(|i| derive_seed(opts.base_seed, i as u64)).collect();
    let visits: Vec<Vec<u64>> = seeds
        .par_iter()
        .map(|&seed| single_run(strategy, opts, seed))
        .collect::<Result<_>>()?;
    let cells = opts.grid_size * opts.grid_size;
    let mut runs = Vec::with_capacity(opts.runs);
    let mut bitmaps = Vec::with_capacity(opts.runs);
    let mut freq = vec![0.0; cells];
    for (i, v) in visits.iter().enumerate() {
        let bitmap: Vec<bool> = v.iter().map(|&c| c > 0).collect();
        runs.push(RunCoverage {
            run_id: i,
            seed: seeds[i],
            coverage_percent: coverage_percent(&bitmap)?,
        });
        bitmaps.push(bitmap);
        let total: u64 = v.iter().sum();
        for (f, &c) in freq.iter_mut().zip(v) {
            *f += c as f64 / total as f64 / opts.runs as f64;
        }
    }
    let (mean, stderr) = mean_stderr(&runs.iter().map(|r| r.coverage_percent).collect::<Vec<_>>());
    Ok(CoverageResult {
        strategy: strategy.name().to_string(),
        episode_length: opts.episode_length,
        total_steps: opts.total_steps,
        grid_size: opts.grid_size,
        runs,
        bitmaps,
        mean,
        stderr,
        visit_frequency: freq,
        warnings,
    })
}

/// Monte-Carlo occupancy statistics of a random-target behavior process.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyEstimate {
    pub rollouts: u64,
    pub steps: usize,
    /// Mean over rollouts of each cell's occupancy averaged over steps `1..=T`.
    pub mean: Vec<f64>,
    /// Standard error of `mean`.
    pub stderr: Vec<f64>,
}

const ROLLOUT_CHUNK: u64 = 10_000;

/// Simulates `rollouts` episodes of `steps` steps on a `size x size` grid
/// from `start` with uniform target actions routed through `strategy`.
pub fn monte_carlo_occupancy(
    size: usize,
    start: (i64, i64),
    strategy: &PersistenceStrategy,
    steps: usize,
    rollouts: u64,
    seed: u64,
) -> Result<OccupancyEstimate> {
    if strategy.needs_novelty() {
        return Err(Error::config("occupancy simulation takes count-free strategies only"));
    }
    if steps == 0 || rollouts == 0 {
        return Err(Error::config("steps and rollouts must be positive"));
    }
    let persistence = Persistence::new(strategy.clone())?;
    GridWorld::new(size, start, None, RewardSpec::None, steps)?;
    let cells = size * size;
    let chunks = rollouts.div_ceil(ROLLOUT_CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let n = ROLLOUT_CHUNK.min(rollouts - chunk * ROLLOUT_CHUNK);
            let mut env = GridWorld::new(size, start, None, RewardSpec::None, steps)?;
            let spec = env.action_spec().clone();
            let mut action_rng = seeded_rng(derive_seed(seed, 2 * chunk));
            let mut persist_rng = seeded_rng(derive_seed(seed, 2 * chunk + 1));
            let mut sum = vec![0.0; cells];
            let mut sum_sq = vec![0.0; cells];
            let mut counts = vec![0u32; cells];
            let mut touched = Vec::with_capacity(steps);
            for _ in 0..n {
                let mut state = env.reset();
                let mut pstate = PersistenceState::new();
                for t in 0..steps {
                    let mut source = UniformSource {
                        spec: &spec,
                        rng: &mut action_rng,
                    };
                    let d = persistence.behavior_step(&mut pstate, &state, t as u64, &mut source, None, &mut persist_rng)?;
                    let step = env.step(&d.action)?;
                    let i = env_index(size, &step.next_state);
                    if counts[i] == 0 {
                        touched.push(i);
                    }
                    counts[i] += 1;
                    state = step.next_state;
                }
                for &i in &touched {
                    let x = counts[i] as f64 / steps as f64;
                    sum[i] += x;
                    sum_sq[i] += x * x;
                    counts[i] = 0;
                }
                touched.clear();
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    for (s, q) in partial {
        for i in 0..cells {
            sum[i] += s[i];
            sum_sq[i] += q[i];
        }
    }
    let n = rollouts as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = mean
        .iter()
        .zip(&sum_sq)
        .map(|(m, q)| {
            let var = ((q / n - m * m) * n / (n - 1.0).max(1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(OccupancyEstimate {
        rollouts,
        steps,
        mean,
        stderr,
    })
}
