//! Per-step repeat probabilities of a SNAP run, averaged over 1000-step
//! windows: the probability falls as the visited region fills in.
//!
//! Usage: `cargo run --release --example repeat_trace [steps] [seed]`

use snap_lab::agents::{train_snap, AgentConfig, AgentKind, TrainOptions};
use snap_lab::env::{EnvConfig, EnvName};
use snap_lab::harness::trace::{probability_trace, DEFAULT_WINDOW};
use snap_lab::novelty::{CountUpdate, CounterKind, NoveltyConfig};
use snap_lab::persistence::PersistenceStrategy;
use snap_lab::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let env = EnvConfig::new(EnvName::SparseGoalGrid, 200);
    let agent = AgentConfig {
        batch: 32,
        seed_frames: 500,
        exploration_steps: 0,
        ..AgentConfig::with_kind(AgentKind::QTable)
    };
    let opts = TrainOptions {
        total_steps: steps,
        eval_every: 0,
        count_update: CountUpdate::OnVisit,
        ..Default::default()
    };
    for counter in [CounterKind::Tabular, CounterKind::Simhash] {
        let novelty = NoveltyConfig::with_counter(counter).build(2, Some(env.feature_bounds()), seed)?;
        let r = train_snap(&env, &agent, &PersistenceStrategy::snap(1.0), Some(novelty), &opts, seed)?;
        println!("{counter:?} counter, first goal at {:?}", r.first_goal_step);
        for (end, p) in probability_trace(&r.repeat_probabilities, DEFAULT_WINDOW)? {
            let bar = "#".repeat((p * 50.0).round() as usize);
            println!("  {end:>6} {p:.3} {bar}");
        }
    }
    Ok(())
}
