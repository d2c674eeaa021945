//! Result layout, experiment sweeps and report aggregation.
//!
//! Every run writes `<out>/<label>/<env>/seed_<n>/` containing
//! `config.toml`, `record.jsonl`, `probability.csv`, `trace.csv`,
//! `summary.json` and `meta.json`. Only `meta.json` carries a timestamp.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{aggregate_metrics, mean_stderr, metrics_csv, normalize, MetricsSummary};
use super::svg::{emit_curves, write_svg, CurveSeries};
use super::trace::{probability_trace, trace_csv, DEFAULT_WINDOW};
use super::write_atomic;
use crate::agents::{train_snap, EvalPoint, RunRecord};
use crate::{derive_seed, Error, Result};

/// Stream tag for the SimHash projection seed of a run.
const PROJECTION_STREAM: u64 = 7;

/// Directory of one run.
pub fn run_dir(out: &Path, label: &str, cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    out.join(label).join(cfg.env.name.to_string()).join(format!("seed_{seed}"))
}

/// Trains one seed of `cfg`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let novelty = if cfg.persistence.needs_novelty() {
        let env = cfg.env.build()?;
        Some(cfg.novelty.build(
            env.state_dim(),
            Some(cfg.env.feature_bounds()),
            derive_seed(seed, PROJECTION_STREAM),
        )?)
    } else {
        None
    };
    train_snap(&cfg.env, &cfg.agent, &cfg.persistence, novelty, &cfg.train, seed)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Writes every result file of a finished run.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, seed: u64, record: &RunRecord) -> Result<()> {
    let mut snapshot = cfg.clone();
    snapshot.seeds = vec![seed];
    snapshot.out_dir = None;
    write_atomic(&dir.join("config.toml"), snapshot.to_toml()?.as_bytes())?;
    write_atomic(&dir.join("record.jsonl"), record.to_jsonl()?.as_bytes())?;
    write_atomic(&dir.join("probability.csv"), record.probability_csv().as_bytes())?;
    let trace = probability_trace(&record.repeat_probabilities, DEFAULT_WINDOW)?;
    write_atomic(&dir.join("trace.csv"), trace_csv(&trace).as_bytes())?;
    write_atomic(&dir.join("summary.json"), record.summary_json()?.as_bytes())?;
    let meta = serde_json::json!({ "created_unix": unix_time(), "crate_version": env!("CARGO_PKG_VERSION") });
    write_atomic(&dir.join("meta.json"), serde_json::to_string_pretty(&meta)?.as_bytes())
}

/// Runs every seed of `cfg` in parallel and writes them under `out/label`.
pub fn run_experiment(cfg: &ExperimentConfig, label: &str, out: &Path) -> Result<Vec<(u64, RunRecord)>> {
    cfg.validate()?;
    let records: Vec<(u64, RunRecord)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed).map(|r| (seed, r)))
        .collect::<Result<_>>()?;
    for (seed, r) in &records {
        write_run(&run_dir(out, label, cfg, *seed), cfg, *seed, r)?;
    }
    Ok(records)
}

/// One run found on disk by [`collect_runs`].
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub label: String,
    pub env: String,
    pub seed_dir: String,
    pub config: ExperimentConfig,
    pub evals: Vec<EvalPoint>,
    pub trace: Vec<(u64, f64)>,
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    v.sort();
    Ok(v)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, message: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn read_trace(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = read(path)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (a, b) = l.split_once(',').ok_or_else(|| parse_err(path, "expected step,mean_p"))?;
            Ok((
                a.parse().map_err(|e| parse_err(path, e))?,
                b.parse().map_err(|e| parse_err(path, e))?,
            ))
        })
        .collect()
}

/// Finds every `<label>/<env>/seed_*/record.jsonl` below `out`, in sorted order.
pub fn collect_runs(out: &Path) -> Result<Vec<StoredRun>> {
    let mut runs = Vec::new();
    for label_dir in sorted_subdirs(out)? {
        for env_dir in sorted_subdirs(&label_dir)? {
            for seed_dir in sorted_subdirs(&env_dir)? {
                let record = seed_dir.join("record.jsonl");
                let name = seed_dir.file_name().unwrap_or_default().to_string_lossy().to_string();
                if !name.starts_with("seed_") || !record.is_file() {
                    continue;
                }
                let cfg_path = seed_dir.join("config.toml");
                let config: ExperimentConfig =
                    toml::from_str(&read(&cfg_path)?).map_err(|e| parse_err(&cfg_path, e))?;
                let evals = read(&record)?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| serde_json::from_str(l).map_err(|e| parse_err(&record, e)))
                    .collect::<Result<Vec<EvalPoint>>>()?;
                let trace_path = seed_dir.join("trace.csv");
                let trace = if trace_path.is_file() { read_trace(&trace_path)? } else { Vec::new() };
                runs.push(StoredRun {
                    label: label_dir.file_name().unwrap_or_default().to_string_lossy().to_string(),
                    env: env_dir.file_name().unwrap_or_default().to_string_lossy().to_string(),
                    seed_dir: name,
                    config,
                    evals,
                    trace,
                });
            }
        }
    }
    Ok(runs)
}

/// Metrics per strategy label over the final evaluation of every run.
pub fn summarize_runs(runs: &[StoredRun]) -> Result<Vec<(String, MetricsSummary)>> {
    let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in runs {
        if let Some(last) = r.evals.last() {
            let s = normalize(&[last.mean_return], r.config.score_scale)?[0];
            scores.entry(&r.label).or_default().push(s);
        }
    }
    scores
        .into_iter()
        .map(|(label, s)| Ok((label.to_string(), aggregate_metrics(&s)?)))
        .collect()
}

/// Mean +/- stderr across runs of `value(run)` at each shared x position.
fn curves<F>(runs: &[StoredRun], points: F) -> Vec<CurveSeries>
where
    F: Fn(&StoredRun) -> Vec<(f64, f64)>,
{
    let mut groups: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in runs {
        let g = groups.entry(format!("{}/{}", r.label, r.env)).or_default();
        for (x, y) in points(r) {
            g.entry(x.to_bits()).or_default().push(y);
        }
    }
    groups
        .into_iter()
        .map(|(label, g)| {
            let mut pts: Vec<(f64, f64, f64)> = g
                .into_iter()
                .map(|(x, ys)| {
                    let (m, se) = mean_stderr(&ys);
                    (f64::from_bits(x), m, se)
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            CurveSeries { label, points: pts }
        })
        .collect()
}

/// Writes `metrics.csv`, `returns.svg` and `probability.svg` into `out`.
pub fn write_report(out: &Path) -> Result<Vec<(String, MetricsSummary)>> {
    let runs = collect_runs(out)?;
    if runs.is_empty() {
        return Err(Error::config(format!("no runs found under {}", out.display())));
    }
    let rows = summarize_runs(&runs)?;
    write_atomic(&out.join("metrics.csv"), metrics_csv(&rows).as_bytes())?;
    let returns = curves(&runs, |r| {
        r.evals.iter().map(|e| (e.step as f64, e.mean_return / r.config.score_scale)).collect()
    });
    write_svg(
        &out.join("returns.svg"),
        &emit_curves(&returns, "Evaluation return", "environment steps", "normalized return")?,
    )?;
    let probs = curves(&runs, |r| r.trace.iter().map(|&(s, p)| (s as f64, p)).collect());
    write_svg(
        &out.join("probability.svg"),
        &emit_curves(&probs, "Repeat probability", "environment steps", "mean repeat probability")?,
    )?;
    Ok(rows)
}
