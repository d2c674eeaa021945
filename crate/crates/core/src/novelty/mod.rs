//! State-novelty estimation by counting hashed, binned or clustered states.

mod simhash;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use simhash::{simhash, BinaryCode, ProjectionMatrix, MAX_CODE_BITS};

use crate::env::StateVec;
use crate::{Error, Result};

/// Default code width.
pub const DEFAULT_CODE_BITS: usize = 32;
/// Default number of k-means clusters.
pub const DEFAULT_CLUSTERS: usize = 64;
/// Default online k-means step size.
pub const DEFAULT_KMEANS_RATE: f64 = 0.01;

/// Per-dimension bin code `floor(x_i / bin_width)`.
pub fn quantize_state(state: &[f64], bin_width: f64) -> Result<Vec<i64>> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::config(format!("bin_width must be positive, got {bin_width}")));
    }
    Ok(state.iter().map(|x| (x / bin_width).floor() as i64).collect())
}

/// What a count is attached to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoveltyKey {
    Code(BinaryCode),
    /// Exact state, as the bit patterns of its coordinates.
    Exact(Vec<u64>),
    Bins(Vec<i64>),
    Cluster(usize),
}

impl fmt::Display for NoveltyKey {
    /// Hex rendering used in the count CSV.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::LowerHex>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_char('.')?;
                }
                write!(f, "{x:x}")?;
            }
            Ok(())
        }
        match self {
            NoveltyKey::Code(c) => write!(f, "{c:x}"),
            NoveltyKey::Exact(bits) => join(f, bits),
            NoveltyKey::Bins(bins) => join(f, bins),
            NoveltyKey::Cluster(id) => write!(f, "{id:x}"),
        }
    }
}

/// Pseudo-count table. Absent keys have count zero; counts never decrease.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountTable {
    counts: HashMap<NoveltyKey, u64>,
    total: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&mut self, key: NoveltyKey) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn get(&self, key: &NoveltyKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct keys seen.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NoveltyKey, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Two-column CSV `code,count`, rows sorted by key.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort();
        let mut out = String::from("code,count\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::harness::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Maps raw states into the feature space that gets hashed.
#[derive(Clone, Default)]
pub enum FeatureMap {
    #[default]
    Identity,
    /// `((s - center) / scale, 1)`: centred, scaled, with a constant feature
    /// appended so the random hyperplanes need not pass through the center.
    Affine { center: Vec<f64>, scale: Vec<f64> },
    Custom {
        output_dim: usize,
        map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    },
}

impl fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureMap::Identity => f.write_str("Identity"),
            FeatureMap::Affine { center, scale } => f
                .debug_struct("Affine")
                .field("center", center)
                .field("scale", scale)
                .finish(),
            FeatureMap::Custom { output_dim, .. } => {
                f.debug_struct("Custom").field("output_dim", output_dim).finish()
            }
        }
    }
}

impl FeatureMap {
    pub fn output_dim(&self, state_dim: usize) -> usize {
        match self {
            FeatureMap::Identity => state_dim,
            FeatureMap::Affine { center, .. } => center.len() + 1,
            FeatureMap::Custom { output_dim, .. } => *output_dim,
        }
    }

    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => state.to_vec(),
            FeatureMap::Affine { center, scale } => state
                .iter()
                .zip(center.iter().zip(scale))
                .map(|(x, (c, s))| (x - c) / s)
                .chain(std::iter::once(1.0))
                .collect(),
            FeatureMap::Custom { map, .. } => map(state),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NoveltyVariant {
    SimHash { projection: ProjectionMatrix },
    Tabular,
    Quantized { bin_width: f64 },
    KMeans {
        clusters: usize,
        learning_rate: f64,
        centroids: Vec<Vec<f64>>,
    },
}

/// When counts are updated during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountUpdate {
    /// From the same mini-batch that trains the learner.
    #[default]
    OnMinibatch,
    /// Immediately whenever a state is entered.
    OnVisit,
}

/// Novelty estimator: one counting variant plus its count table.
#[derive(Clone, Debug)]
pub struct NoveltyEstimator {
    variant: NoveltyVariant,
    feature_map: FeatureMap,
    table: CountTable,
}

impl NoveltyEstimator {
    /// SimHash counting with a fresh `bits x feature_dim` projection.
    pub fn simhash(bits: usize, state_dim: usize, feature_map: FeatureMap, seed: u64) -> Result<Self> {
        let projection = ProjectionMatrix::new(bits, feature_map.output_dim(state_dim), seed)?;
        Ok(Self::with_projection(projection, feature_map))
    }

    pub fn with_projection(projection: ProjectionMatrix, feature_map: FeatureMap) -> Self {
        NoveltyEstimator {
            variant: NoveltyVariant::SimHash { projection },
            feature_map,
            table: CountTable::new(),
        }
    }

    /// Counts exact states.
    pub fn tabular() -> Self {
        NoveltyEstimator {
            variant: NoveltyVariant::Tabular,
            feature_map: FeatureMap::Identity,
            table: CountTable::new(),
        }
    }

    pub fn quantized(bin_width: f64) -> Result<Self> {
        quantize_state(&[], bin_width)?;
        Ok(NoveltyEstimator {
            variant: NoveltyVariant::Quantized { bin_width },
            feature_map: FeatureMap::Identity,
            table: CountTable::new(),
        })
    }

    /// Online k-means counting; centroids are seeded from the first batch.
    pub fn kmeans(clusters: usize, learning_rate: f64) -> Result<Self> {
        if clusters == 0 {
            return Err(Error::config("k-means needs at least one cluster"));
        }
        if !(0.0..=1.0).contains(&learning_rate) {
            return Err(Error::config("k-means learning rate must be in [0, 1]"));
        }
        Ok(NoveltyEstimator {
            variant: NoveltyVariant::KMeans {
                clusters,
                learning_rate,
                centroids: Vec::new(),
            },
            feature_map: FeatureMap::Identity,
            table: CountTable::new(),
        })
    }

    pub fn variant(&self) -> &NoveltyVariant {
        &self.variant
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    /// Key of `state` without mutating anything. `None` for k-means before
    /// its centroids exist.
    pub fn key(&self, state: &[f64]) -> Result<Option<NoveltyKey>> {
        Ok(Some(match &self.variant {
            NoveltyVariant::SimHash { projection } => {
                NoveltyKey::Code(simhash(&self.feature_map.apply(state), projection)?)
            }
            NoveltyVariant::Tabular => {
                // -0.0 and 0.0 are the same state.
                NoveltyKey::Exact(state.iter().map(|x| (x + 0.0).to_bits()).collect())
            }
            NoveltyVariant::Quantized { bin_width } => {
                NoveltyKey::Bins(quantize_state(state, *bin_width)?)
            }
            NoveltyVariant::KMeans { centroids, .. } => {
                if centroids.is_empty() {
                    return Ok(None);
                }
                NoveltyKey::Cluster(nearest(centroids, state)?)
            }
        }))
    }

    /// Pseudo-count of `state`; zero for anything never counted.
    pub fn pseudo_count(&self, state: &[f64]) -> Result<u64> {
        Ok(self.key(state)?.map_or(0, |k| self.table.get(&k)))
    }

    /// Adds one count per state in the batch (with multiplicity).
    pub fn update_counts<'a, I>(&mut self, states: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a StateVec>,
    {
        let states: Vec<&StateVec> = states.into_iter().collect();
        if states.is_empty() {
            return Ok(());
        }
        if let NoveltyVariant::KMeans { centroids, .. } = &self.variant {
            if centroids.is_empty() {
                self.init_centroids(states.iter().map(|s| s.as_ref()))?;
            }
        }
        for s in states {
            let key = match self.variant {
                NoveltyVariant::KMeans { .. } => NoveltyKey::Cluster(self.kmeans_assign_update(s)?),
                _ => self.key(s)?.expect("non-k-means keys always exist"),
            };
            self.table.increment(key);
        }
        Ok(())
    }

    /// Counts a single visited state.
    pub fn record_visit(&mut self, state: &StateVec) -> Result<()> {
        self.update_counts(std::iter::once(state))
    }

    /// Seeds k-means centroids with up to `k` distinct states, in order.
    pub fn init_centroids<'a, I>(&mut self, states: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let NoveltyVariant::KMeans {
            clusters, centroids, ..
        } = &mut self.variant
        else {
            return Err(Error::contract("centroids only exist for the k-means variant"));
        };
        for s in states {
            if centroids.len() == *clusters {
                break;
            }
            if !centroids.iter().any(|c| c.as_slice() == s) {
                centroids.push(s.to_vec());
            }
        }
        if centroids.is_empty() {
            return Err(Error::contract("k-means initialization needs at least one state"));
        }
        Ok(())
    }

    pub fn centroids(&self) -> Option<&[Vec<f64>]> {
        match &self.variant {
            NoveltyVariant::KMeans { centroids, .. } => Some(centroids),
            _ => None,
        }
    }

    /// Nearest centroid id (ties to the lowest id), then moves that centroid
    /// toward the state by the learning rate.
    pub fn kmeans_assign_update(&mut self, state: &[f64]) -> Result<usize> {
        let NoveltyVariant::KMeans {
            learning_rate,
            centroids,
            ..
        } = &mut self.variant
        else {
            return Err(Error::contract("not a k-means estimator"));
        };
        if centroids.is_empty() {
            return Err(Error::contract("k-means centroids are not initialized"));
        }
        let id = nearest(centroids, state)?;
        let eta = *learning_rate;
        for (c, x) in centroids[id].iter_mut().zip(state) {
            *c += eta * (x - *c);
        }
        Ok(id)
    }
}

fn nearest(centroids: &[Vec<f64>], state: &[f64]) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        if c.len() != state.len() {
            return Err(Error::contract("state dimension does not match centroids"));
        }
        let d: f64 = c.iter().zip(state).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// Which counter a run uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterKind {
    #[default]
    Simhash,
    Tabular,
    Quantized,
    Kmeans,
}

/// Input of the SimHash projection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Raw state.
    Identity,
    /// State centred and scaled by the environment's bounds, plus a bias.
    #[default]
    Normalized,
}

/// Serializable description of a [`NoveltyEstimator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoveltyConfig {
    pub counter: CounterKind,
    pub bits: usize,
    pub features: FeatureKind,
    pub bin_width: f64,
    pub clusters: usize,
    pub learning_rate: f64,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        NoveltyConfig {
            counter: CounterKind::Simhash,
            bits: DEFAULT_CODE_BITS,
            features: FeatureKind::Normalized,
            bin_width: 1.0,
            clusters: DEFAULT_CLUSTERS,
            learning_rate: DEFAULT_KMEANS_RATE,
        }
    }
}

impl NoveltyConfig {
    pub fn with_counter(counter: CounterKind) -> Self {
        NoveltyConfig {
            counter,
            ..Default::default()
        }
    }

    /// Builds the estimator. `bounds` is `(center, half_width)` per state
    /// dimension, used by normalized features; `seed` draws the projection.
    pub fn build(&self, state_dim: usize, bounds: Option<(Vec<f64>, Vec<f64>)>, seed: u64) -> Result<NoveltyEstimator> {
        match self.counter {
            CounterKind::Simhash => {
                let map = match (self.features, bounds) {
                    (FeatureKind::Identity, _) => FeatureMap::Identity,
                    (FeatureKind::Normalized, Some((center, scale))) => {
                        if center.len() != state_dim || scale.len() != state_dim {
                            return Err(Error::config("feature bounds do not match the state dimension"));
                        }
                        if scale.iter().any(|s| !(*s > 0.0)) {
                            return Err(Error::config("feature scales must be positive"));
                        }
                        FeatureMap::Affine { center, scale }
                    }
                    (FeatureKind::Normalized, None) => {
                        return Err(Error::config("normalized features need environment bounds"))
                    }
                };
                NoveltyEstimator::simhash(self.bits, state_dim, map, seed)
            }
            CounterKind::Tabular => Ok(NoveltyEstimator::tabular()),
            CounterKind::Quantized => NoveltyEstimator::quantized(self.bin_width),
            CounterKind::Kmeans => NoveltyEstimator::kmeans(self.clusters, self.learning_rate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(x: &[f64]) -> StateVec {
        StateVec(x.to_vec())
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_state(&[0.4, 0.9], 0.5).unwrap(), vec![0, 1]);
        assert_eq!(quantize_state(&[7.0, 3.0], 1.0).unwrap(), vec![7, 3]);
        assert_eq!(
            quantize_state(&[0.2, 0.2], 0.5).unwrap(),
            quantize_state(&[0.3, 0.3], 0.5).unwrap()
        );
        assert_eq!(quantize_state(&[-0.1], 0.5).unwrap(), vec![-1]);
        assert!(quantize_state(&[1.0], 0.0).is_err());
        assert!(quantize_state(&[1.0], -1.0).is_err());
    }

    #[test]
    fn fresh_estimator_counts_zero() {
        let est = NoveltyEstimator::simhash(32, 2, FeatureMap::Identity, 1).unwrap();
        assert_eq!(est.pseudo_count(&[3.0, 4.0]).unwrap(), 0);
        assert_eq!(NoveltyEstimator::tabular().pseudo_count(&[1.0]).unwrap(), 0);
    }

    #[test]
    fn empty_batch_is_noop() {
        let mut est = NoveltyEstimator::tabular();
        est.update_counts(std::iter::empty()).unwrap();
        assert!(est.table().is_empty());
        assert_eq!(est.table().total(), 0);
    }

    #[test]
    fn multiplicity_and_accumulation() {
        let a = ProjectionMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut est = NoveltyEstimator::with_projection(a, FeatureMap::Identity);
        let (s, s2) = (sv(&[1.0, 1.0]), sv(&[-1.0, 1.0]));
        est.update_counts([&s, &s, &s2]).unwrap();
        assert_eq!(est.pseudo_count(&s).unwrap(), 2);
        assert_eq!(est.pseudo_count(&s2).unwrap(), 1);
        // Same quadrant, same code, same count.
        assert_eq!(est.pseudo_count(&[5.0, 0.5]).unwrap(), 2);
        assert_eq!(est.table().total(), 3);
    }

    #[test]
    fn repeated_batches_accumulate() {
        let mut est = NoveltyEstimator::simhash(32, 2, FeatureMap::Identity, 9).unwrap();
        let s = sv(&[0.3, -0.7]);
        for _ in 0..3 {
            est.update_counts([&s]).unwrap();
        }
        assert_eq!(est.pseudo_count(&s).unwrap(), 3);
    }

    #[test]
    fn batch_total_is_batch_size() {
        let mut est = NoveltyEstimator::simhash(32, 2, FeatureMap::Identity, 2).unwrap();
        let batch: Vec<StateVec> = (0..256)
            .map(|i| sv(&[(i % 200) as f64 - 100.0, (i * 7 % 13) as f64 - 6.0]))
            .collect();
        est.update_counts(batch.iter()).unwrap();
        let sum: u64 = est.table().iter().map(|(_, c)| c).sum();
        assert_eq!(sum, 256);
        assert_eq!(est.table().total(), 256);
    }

    #[test]
    fn kmeans_online_update() {
        let mut est = NoveltyEstimator::kmeans(2, 0.1).unwrap();
        assert!(est.kmeans_assign_update(&[1.0, 1.0]).is_err());
        est.init_centroids([[0.0, 0.0].as_slice(), [10.0, 10.0].as_slice()])
            .unwrap();
        assert_eq!(est.kmeans_assign_update(&[1.0, 1.0]).unwrap(), 0);
        let c = &est.centroids().unwrap()[0];
        assert!((c[0] - 0.1).abs() < 1e-15 && (c[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kmeans_tie_goes_to_lowest_id() {
        let mut est = NoveltyEstimator::kmeans(2, 0.0).unwrap();
        est.init_centroids([[0.0].as_slice(), [2.0].as_slice()]).unwrap();
        assert_eq!(est.kmeans_assign_update(&[1.0]).unwrap(), 0);
    }

    #[test]
    fn kmeans_zero_rate_keeps_centroids() {
        let mut est = NoveltyEstimator::kmeans(2, 0.0).unwrap();
        est.init_centroids([[0.0].as_slice(), [5.0].as_slice()]).unwrap();
        for x in [0.4, 4.0, 7.0, -3.0] {
            est.kmeans_assign_update(&[x]).unwrap();
        }
        assert_eq!(est.centroids().unwrap(), &[vec![0.0], vec![5.0]]);
    }

    #[test]
    fn kmeans_seeds_from_first_batch() {
        let mut est = NoveltyEstimator::kmeans(3, 0.01).unwrap();
        assert_eq!(est.pseudo_count(&[0.0]).unwrap(), 0);
        let batch: Vec<_> = [0.0, 0.0, 1.0, 5.0, 9.0].iter().map(|&x| sv(&[x])).collect();
        est.update_counts(batch.iter()).unwrap();
        assert_eq!(est.centroids().unwrap().len(), 3);
        assert_eq!(est.table().total(), 5);
    }

    #[test]
    fn csv_is_sorted_and_headed() {
        let mut est = NoveltyEstimator::quantized(1.0).unwrap();
        est.update_counts([&sv(&[2.0, -1.0]), &sv(&[0.0, 0.0]), &sv(&[0.5, 0.5])])
            .unwrap();
        assert_eq!(est.table().to_csv(), "code,count\n0.0,2\n2.ffffffffffffffff,1\n");
    }

    #[test]
    fn affine_feature_map_appends_bias() {
        let g = FeatureMap::Affine {
            center: vec![25.0, 25.0],
            scale: vec![25.0, 25.0],
        };
        assert_eq!(g.apply(&[50.0, 0.0]), vec![1.0, -1.0, 1.0]);
        assert_eq!(g.output_dim(2), 3);
    }
}
