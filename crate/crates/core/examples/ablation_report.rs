//! Runs the default ablation set (counters, schedules, no persistence) on the
//! chain and aggregates the results into metrics and figures.
//!
//! Usage: `cargo run --release --example ablation_report [out-dir]`

use snap_lab::env::{EnvConfig, EnvName};
use snap_lab::harness::config::ExperimentConfig;
use snap_lab::harness::output::{run_experiment, write_report};
use snap_lab::novelty::CountUpdate;
use snap_lab::Result;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "results/ablation".into());
    let out = std::path::Path::new(&out);
    let mut cfg = ExperimentConfig::new(EnvConfig::new(EnvName::Chain, 40));
    cfg.seeds = (0..5).collect();
    cfg.score_scale = 1.0;
    cfg.agent.batch = 32;
    cfg.agent.seed_frames = 200;
    cfg.train.total_steps = 5000;
    cfg.train.eval_every = 500;
    cfg.train.eval_episodes = 5;
    cfg.train.count_update = CountUpdate::OnVisit;
    for v in cfg.ablation_variants() {
        run_experiment(&cfg.with_variant(&v), &v.label, out)?;
    }
    println!("{:<15} {:>7} {:>7} {:>7} {:>7}", "variant", "median", "iqm", "mean", "gap");
    for (label, m) in write_report(out)? {
        println!("{label:<15} {:>7.3} {:>7.3} {:>7.3} {:>7.3}", m.median, m.iqm, m.mean, m.optimality_gap);
    }
    println!("metrics.csv, returns.svg and probability.svg in {}", out.display());
    Ok(())
}
