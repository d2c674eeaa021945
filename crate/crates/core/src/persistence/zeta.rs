use rand::Rng as _;

use crate::{Error, Result};

/// Zeta law `p(n) ∝ n^-mu` truncated to `1..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaDuration {
    mu: f64,
    n_max: usize,
    cdf: Vec<f64>,
}

impl ZetaDuration {
    pub fn new(mu: f64, n_max: usize) -> Result<Self> {
        if !(mu > 1.0) || !mu.is_finite() {
            return Err(Error::config(format!("zeta exponent mu must be > 1, got {mu}")));
        }
        if n_max == 0 {
            return Err(Error::config("zeta n_max must be at least 1"));
        }
        let weights: Vec<f64> = (1..=n_max).map(|n| (n as f64).powf(-mu)).collect();
        let z: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / z;
                acc
            })
            .collect();
        *cdf.last_mut().expect("n_max >= 1") = 1.0;
        Ok(ZetaDuration { mu, n_max, cdf })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Probability of duration `n`.
    pub fn pmf(&self, n: usize) -> f64 {
        match n {
            0 => 0.0,
            1 => self.cdf[0],
            n if n <= self.n_max => self.cdf[n - 1] - self.cdf[n - 2],
            _ => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut crate::Rng) -> usize {
        if self.n_max == 1 {
            return 1;
        }
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}

/// One draw from the truncated zeta law.
pub fn sample_zeta(mu: f64, n_max: usize, rng: &mut crate::Rng) -> Result<usize> {
    Ok(ZetaDuration::new(mu, n_max)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_support() {
        let mut rng = crate::seeded_rng(0);
        for _ in 0..100 {
            assert_eq!(sample_zeta(2.0, 1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn three_point_mass_function() {
        let z = ZetaDuration::new(2.0, 3).unwrap();
        for (n, expected) in [(1, 36.0 / 49.0), (2, 9.0 / 49.0), (3, 4.0 / 49.0)] {
            assert!((z.pmf(n) - expected).abs() < 1e-15, "n={n}");
        }
        assert_eq!(z.pmf(0), 0.0);
        assert_eq!(z.pmf(4), 0.0);
    }

    #[test]
    fn normalization() {
        let z = ZetaDuration::new(2.0, 100).unwrap();
        let total: f64 = (1..=100).map(|n| z.pmf(n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ZetaDuration::new(1.0, 10).is_err());
        assert!(ZetaDuration::new(f64::NAN, 10).is_err());
        assert!(ZetaDuration::new(2.0, 0).is_err());
    }

    #[test]
    fn samples_stay_in_support() {
        let z = ZetaDuration::new(1.5, 7).unwrap();
        let mut rng = crate::seeded_rng(1);
        assert!((0..10_000).map(|_| z.sample(&mut rng)).all(|n| (1..=7).contains(&n)));
    }
}
