//! Aggregate statistics over per-run normalized scores.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Return scale used to normalize raw episode returns.
pub const DEFAULT_SCORE_SCALE: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub median: f64,
    /// Mean of the middle half; `floor(n / 4)` scores trimmed from each end.
    pub iqm: f64,
    pub mean: f64,
    /// Mean shortfall below 1.
    pub optimality_gap: f64,
}

fn sorted(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::config("no scores to aggregate"));
    }
    if let Some(x) = scores.iter().find(|x| !x.is_finite()) {
        return Err(Error::config(format!("score {x} is not finite")));
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn median(scores: &[f64]) -> Result<f64> {
    let v = sorted(scores)?;
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn aggregate_metrics(scores: &[f64]) -> Result<MetricsSummary> {
    let v = sorted(scores)?;
    let n = v.len();
    let trim = n / 4;
    let middle = &v[trim..n - trim];
    // Accumulated around the first element so constant inputs come back exactly.
    let mean_of = |xs: &[f64]| xs[0] + xs.iter().map(|x| x - xs[0]).sum::<f64>() / xs.len() as f64;
    Ok(MetricsSummary {
        median: median(&v)?,
        iqm: mean_of(middle),
        mean: mean_of(&v),
        optimality_gap: mean_of(&v.iter().map(|x| (1.0 - x).max(0.0)).collect::<Vec<_>>()),
    })
}

/// Raw returns divided by `scale`.
pub fn normalize(returns: &[f64], scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::config(format!("score scale {scale} must be positive")));
    }
    Ok(returns.iter().map(|r| r / scale).collect())
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Header plus one `strategy,median,iqm,mean,optimality_gap` row each.
pub fn metrics_csv(rows: &[(String, MetricsSummary)]) -> String {
    let mut out = String::from("strategy,median,iqm,mean,optimality_gap\n");
    for (name, m) in rows {
        out.push_str(&format!(
            "{name},{},{},{},{}\n",
            m.median, m.iqm, m.mean, m.optimality_gap
        ));
    }
    out
}
