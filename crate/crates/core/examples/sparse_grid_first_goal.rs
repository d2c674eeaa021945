//! Steps until tabular Q-learning first reaches the goal of the sparse grid,
//! with plain epsilon-greedy, fixed persistence 4 and SNAP behavior.
//!
//! Usage: `cargo run --release --example sparse_grid_first_goal [seeds] [tabular|simhash] [visit|minibatch]`

use rayon::prelude::*;
use snap_lab::agents::{train_snap, AgentConfig, AgentKind, TrainOptions};
use snap_lab::env::{EnvConfig, EnvName};
use snap_lab::harness::metrics::median;
use snap_lab::novelty::{CountUpdate, CounterKind, NoveltyConfig};
use snap_lab::persistence::PersistenceStrategy;
use snap_lab::{derive_seed, Result};

fn first_goal(
    env: &EnvConfig,
    strategy: &PersistenceStrategy,
    novelty: &NoveltyConfig,
    count_update: CountUpdate,
    seed: u64,
) -> Result<f64> {
    let agent = AgentConfig {
        batch: 32,
        seed_frames: 500,
        exploration_steps: 0,
        ..AgentConfig::with_kind(AgentKind::QTable)
    };
    let opts = TrainOptions {
        total_steps: 200_000,
        eval_every: 0,
        stop_at_first_goal: true,
        count_update,
        ..Default::default()
    };
    let novelty = if strategy.needs_novelty() {
        Some(novelty.build(2, Some(env.feature_bounds()), derive_seed(seed, 7))?)
    } else {
        None
    };
    let r = train_snap(env, &agent, strategy, novelty, &opts, seed)?;
    Ok(r.first_goal_step.map_or(f64::MAX, |s| s as f64))
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let counter = match args.get(2).map(String::as_str) {
        Some("simhash") => CounterKind::Simhash,
        _ => CounterKind::Tabular,
    };
    let count_update = match args.get(3).map(String::as_str) {
        Some("minibatch") => CountUpdate::OnMinibatch,
        _ => CountUpdate::OnVisit,
    };
    let novelty = NoveltyConfig::with_counter(counter);
    let env = EnvConfig::new(EnvName::SparseGoalGrid, 200);
    println!("counter {counter:?}, counts updated {count_update:?}, {seeds} seeds");
    for (name, strategy) in [
        ("epsilon-greedy", PersistenceStrategy::None),
        ("fixed-4", PersistenceStrategy::Fixed { kappa: 4 }),
        ("snap", PersistenceStrategy::snap(1.0)),
    ] {
        let steps: Vec<f64> = (0..seeds)
            .into_par_iter()
            .map(|s| first_goal(&env, &strategy, &novelty, count_update, s))
            .collect::<Result<_>>()?;
        println!("{name:<15} median first-goal step {:>9.1}", median(&steps)?);
    }
    Ok(())
}
