//! Deterministic and entropy-regularized actor-critic on the point-mass,
//! with and without SNAP behavior. Prints the evaluation curve of each run.
//!
//! Usage: `cargo run --release --example point_mass_actor_critic [steps] [seed]`

use snap_lab::agents::{train_snap, AgentConfig, AgentKind, TrainOptions};
use snap_lab::env::{EnvConfig, EnvName};
use snap_lab::novelty::NoveltyConfig;
use snap_lab::persistence::PersistenceStrategy;
use snap_lab::{derive_seed, Result};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let env = EnvConfig::new(EnvName::PointMass, 200);
    let opts = TrainOptions {
        total_steps: steps,
        eval_every: steps / 10,
        eval_episodes: 5,
        ..Default::default()
    };
    for kind in [AgentKind::Ddpg, AgentKind::Sac] {
        let agent = AgentConfig {
            lr: 1e-3,
            seed_frames: 1000,
            exploration_steps: 500,
            batch: 64,
            ..AgentConfig::with_kind(kind)
        };
        for strategy in [PersistenceStrategy::None, PersistenceStrategy::snap(1.0)] {
            let novelty = if strategy.needs_novelty() {
                Some(NoveltyConfig::default().build(4, Some(env.feature_bounds()), derive_seed(seed, 7))?)
            } else {
                None
            };
            let r = train_snap(&env, &agent, &strategy, novelty, &opts, seed)?;
            let curve: Vec<String> = r.evals.iter().map(|e| format!("{:.1}", e.mean_return)).collect();
            println!("{kind:?} / {:<5} returns [{}]", strategy.name(), curve.join(", "));
        }
    }
    Ok(())
}
