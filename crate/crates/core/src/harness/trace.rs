//! Windowed repeat-probability traces.

use crate::{Error, Result};

/// Default window length in steps.
pub const DEFAULT_WINDOW: usize = 1000;

/// Non-overlapping window means of a per-step trace, as
/// `(last step covered, mean)`. A trailing partial window is kept.
pub fn probability_trace(probabilities: &[f64], window: usize) -> Result<Vec<(u64, f64)>> {
    if window == 0 {
        return Err(Error::config("trace window must be at least 1"));
    }
    let mut out = Vec::with_capacity(probabilities.len().div_ceil(window));
    for (i, chunk) in probabilities.chunks(window).enumerate() {
        let end = (i * window + chunk.len()) as u64;
        out.push((end, chunk.iter().sum::<f64>() / chunk.len() as f64));
    }
    Ok(out)
}

/// `step,mean_p` rows.
pub fn trace_csv(trace: &[(u64, f64)]) -> String {
    let mut out = String::from("step,mean_p\n");
    for (step, p) in trace {
        out.push_str(&format!("{step},{p}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace() {
        let t = probability_trace(&[0.25; 3500], 1000).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|&(_, p)| p == 0.25));
        assert_eq!(t.last().unwrap().0, 3500);
    }

    #[test]
    fn oversized_window_is_global_mean() {
        let t = probability_trace(&[1.0, 0.0, 0.5], 1000).unwrap();
        assert_eq!(t, vec![(3, 0.5)]);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(trace_csv(&[(1000, 0.5)]), "step,mean_p\n1000,0.5\n");
    }
}
