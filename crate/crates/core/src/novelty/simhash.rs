use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Widest code that fits one machine word.
pub const MAX_CODE_BITS: usize = 64;

/// `K x D` matrix of i.i.d. standard normal entries, fixed after creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMatrix {
    rows: usize,
    cols: usize,
    seed: u64,
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    /// Draws a `bits x dim` Gaussian matrix from `seed`.
    pub fn new(bits: usize, dim: usize, seed: u64) -> Result<Self> {
        if bits == 0 || dim == 0 {
            return Err(Error::config(format!(
                "projection needs K >= 1 and D >= 1, got K={bits}, D={dim}"
            )));
        }
        if bits > MAX_CODE_BITS {
            return Err(Error::config(format!(
                "codes are stored in one word; K={bits} exceeds {MAX_CODE_BITS}"
            )));
        }
        let mut rng = crate::seeded_rng(seed);
        let entries = (0..bits * dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Ok(ProjectionMatrix {
            rows: bits,
            cols: dim,
            seed,
            entries,
        })
    }

    /// Wraps explicit row-major entries, mainly for tests.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if k == 0 || d == 0 || k > MAX_CODE_BITS || rows.iter().any(|r| r.len() != d) {
            return Err(Error::config("projection rows must be non-empty and rectangular"));
        }
        Ok(ProjectionMatrix {
            rows: k,
            cols: d,
            seed: 0,
            entries: rows.concat(),
        })
    }

    pub fn bits(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.cols..(k + 1) * self.cols]
    }
}

/// A `K`-bit sign code. Bit `k` set means the `k`-th sign is `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryCode {
    bits: u64,
    len: u8,
}

impl BinaryCode {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() || signs.len() > MAX_CODE_BITS {
            return Err(Error::contract("code length must be in 1..=64"));
        }
        let mut bits = 0u64;
        for (k, &s) in signs.iter().enumerate() {
            match s {
                1 => bits |= 1 << k,
                -1 => {}
                _ => return Err(Error::contract("signs must be +1 or -1")),
            }
        }
        Ok(BinaryCode {
            bits,
            len: signs.len() as u8,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn word(&self) -> u64 {
        self.bits
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len())
            .map(|k| if self.bits >> k & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    pub fn hamming(&self, other: &BinaryCode) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl fmt::LowerHex for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.len().div_ceil(4);
        write!(f, "{:0width$x}", self.bits)
    }
}

/// Sign of each projection `A * features`, with `sign(0) = +1`.
pub fn simhash(features: &[f64], projection: &ProjectionMatrix) -> Result<BinaryCode> {
    if features.len() != projection.dim() {
        return Err(Error::contract(format!(
            "feature dimension {} does not match projection dimension {}",
            features.len(),
            projection.dim()
        )));
    }
    let mut bits = 0u64;
    for k in 0..projection.bits() {
        let dot: f64 = projection
            .row(k)
            .iter()
            .zip(features)
            .map(|(a, x)| a * x)
            .sum();
        if dot >= 0.0 {
            bits |= 1 << k;
        }
    }
    Ok(BinaryCode {
        bits,
        len: projection.bits() as u8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_projection_takes_componentwise_sign() {
        let a = ProjectionMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(simhash(&[1.0, -2.0], &a).unwrap().signs(), vec![1, -1]);
    }

    #[test]
    fn zero_features_hash_to_all_plus() {
        let a = ProjectionMatrix::new(32, 3, 5).unwrap();
        let code = simhash(&[0.0; 3], &a).unwrap();
        assert!(code.signs().iter().all(|&s| s == 1));
        assert_eq!(code.word(), u32::MAX as u64);
    }

    #[test]
    fn tie_rule_on_exact_zero_dot() {
        // Row dots are (0, 6); the first bit exercises sign(0) = +1.
        let a = ProjectionMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(simhash(&[3.0, -3.0], &a).unwrap().signs(), vec![1, 1]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = ProjectionMatrix::new(4, 2, 0).unwrap();
        assert!(simhash(&[1.0, 2.0, 3.0], &a).is_err());
    }

    #[test]
    fn projection_is_seeded() {
        let a = ProjectionMatrix::new(32, 2, 7).unwrap();
        let b = ProjectionMatrix::new(32, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ProjectionMatrix::new(32, 2, 8).unwrap());
        assert_eq!(ProjectionMatrix::new(1, 1, 0).unwrap().entries().len(), 1);
        assert!(ProjectionMatrix::new(0, 2, 0).is_err());
        assert!(ProjectionMatrix::new(2, 0, 0).is_err());
        assert!(ProjectionMatrix::new(65, 2, 0).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let a = ProjectionMatrix::new(64, 15_625, 123).unwrap();
        let n = a.entries().len() as f64;
        let mean = a.entries().iter().sum::<f64>() / n;
        let var = a.entries().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn hex_is_padded_to_code_width() {
        let c = BinaryCode::from_signs(&[1, -1, -1, -1, -1, -1, -1, -1]).unwrap();
        assert_eq!(format!("{c:x}"), "01");
    }
}
