//! The `snap` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{CoverageConfig, ExperimentConfig};
use super::coverage::run_coverage_with;
use super::output::{run_experiment, write_report};
use super::svg::{emit_heatmap, write_svg};
use super::{default_out_dir, write_atomic, OUT_DIR_ENV};
use crate::novelty::CounterKind;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "snap", version, about = "Novelty-guided action persistence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reward-free coverage of the 51x51 grid.
    Coverage(CoverageArgs),
    /// Train with the configured persistence strategy.
    Train,
    /// Train every ablation variant of the config.
    Ablate,
    /// Aggregate metrics and figures over a results directory.
    Report,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// `random`, `zeta` or `count`; repeatable. Defaults to all three.
    #[arg(long)]
    pub strategy: Vec<String>,
    #[arg(long)]
    pub episode_len: Option<usize>,
    #[arg(long)]
    pub total: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Repeat scale of count-repeat.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Zeta exponent of random-zeta.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Counter of count-repeat: tabular or simhash.
    #[arg(long)]
    pub counter: Option<String>,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let path = path.ok_or_else(|| Error::config("--config <path> is required"))?;
    ExperimentConfig::load(path)
}

fn out_root(common: &CommonArgs, cfg: Option<&ExperimentConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(default_out_dir)
}

fn apply_seed(cfg: &mut ExperimentConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
}

fn coverage(common: &CommonArgs, args: &CoverageArgs) -> Result<()> {
    let mut cc = match &common.config {
        Some(p) => {
            let cfg = ExperimentConfig::load(p)?;
            cfg.coverage.clone().unwrap_or_default()
        }
        None => CoverageConfig::default(),
    };
    if !args.strategy.is_empty() {
        cc.strategies = args.strategy.clone();
    }
    if let Some(v) = args.episode_len {
        cc.episode_length = v;
    }
    if let Some(v) = args.total {
        cc.total_steps = v;
    }
    if let Some(v) = args.runs {
        cc.runs = v;
    }
    if let Some(v) = args.alpha {
        cc.alpha = v;
    }
    if let Some(v) = args.mu {
        cc.mu = v;
    }
    if let Some(s) = common.seed {
        cc.base_seed = s;
    }
    if let Some(c) = &args.counter {
        cc.novelty.counter = match c.as_str() {
            "tabular" => CounterKind::Tabular,
            "simhash" => CounterKind::Simhash,
            other => return Err(Error::config(format!("unknown counter {other:?}; expected tabular or simhash"))),
        };
    }
    let out = out_root(common, None).join("coverage");
    let opts = cc.options();
    for strategy in cc.parsed_strategies()? {
        let r = run_coverage_with(strategy, &opts)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        let dir = out.join(format!("{}-L{}-T{}", r.strategy, r.episode_length, r.total_steps));
        write_atomic(&dir.join("coverage.csv"), r.to_csv().as_bytes())?;
        let summary = serde_json::json!({
            "strategy": r.strategy,
            "episode_length": r.episode_length,
            "total_steps": r.total_steps,
            "runs": r.runs.len(),
            "mean_coverage_percent": r.mean,
            "stderr": r.stderr,
        });
        write_atomic(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
        let title = format!("{} visitation, (episode length, total) = ({}, {})", r.strategy, r.episode_length, r.total_steps);
        write_svg(&dir.join("heatmap.svg"), &emit_heatmap(&r.visit_frequency, r.grid_size, r.grid_size, &title)?)?;
        println!("{}: mean coverage {:.3}% (stderr {:.3}) -> {}", r.strategy, r.mean, r.stderr, dir.display());
    }
    Ok(())
}

fn train(common: &CommonArgs) -> Result<()> {
    let mut cfg = load_config(common.config.as_deref())?;
    apply_seed(&mut cfg, common.seed);
    let out = out_root(common, Some(&cfg));
    let label = cfg.label();
    for (seed, r) in run_experiment(&cfg, &label, &out)? {
        let last = r.evals.last().map_or(f64::NAN, |e| e.mean_return);
        println!(
            "{label} seed {seed}: {} steps, {} updates, final return {last}, first goal {:?}",
            r.steps, r.updates, r.first_goal_step
        );
    }
    println!("results in {}", out.display());
    Ok(())
}

fn ablate(common: &CommonArgs) -> Result<()> {
    let mut cfg = load_config(common.config.as_deref())?;
    apply_seed(&mut cfg, common.seed);
    let out = out_root(common, Some(&cfg));
    for v in cfg.ablation_variants() {
        let vc = cfg.with_variant(&v);
        let records = run_experiment(&vc, &v.label, &out)?;
        let finals: Vec<f64> = records
            .iter()
            .filter_map(|(_, r)| r.evals.last().map(|e| e.mean_return))
            .collect();
        println!("{}: final returns {finals:?}", v.label);
    }
    let rows = write_report(&out)?;
    for (label, m) in rows {
        println!("{label}: median {:.4} iqm {:.4} mean {:.4} gap {:.4}", m.median, m.iqm, m.mean, m.optimality_gap);
    }
    Ok(())
}

fn report(common: &CommonArgs) -> Result<()> {
    let cfg = match &common.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let out = out_root(common, cfg.as_ref());
    let rows = write_report(&out)?;
    for (label, m) in rows {
        println!("{label}: median {:.4} iqm {:.4} mean {:.4} gap {:.4}", m.median, m.iqm, m.mean, m.optimality_gap);
    }
    println!("wrote {}", out.join("metrics.csv").display());
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status: 0 on success, 2 on usage errors,
/// 1 on any other failure.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Coverage(a) => coverage(&cli.common, a),
        Command::Train => train(&cli.common),
        Command::Ablate => ablate(&cli.common),
        Command::Report => report(&cli.common),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_cli(["snap", "bogus"]), 2);
        assert_eq!(run_cli(["snap", "train", "--bogus"]), 2);
        assert_eq!(run_cli(["snap"]), 2);
    }

    #[test]
    fn missing_config_fails() {
        assert_eq!(run_cli(["snap", "train", "--config", "/nonexistent/missing.toml"]), 1);
        assert_eq!(run_cli(["snap", "train"]), 1);
    }
}
