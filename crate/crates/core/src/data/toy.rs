//! Synthetic 2-D subtype geometries with optional standard-normal nuisance
//! features appended.
//!
//! Every blob is an isotropic unit-variance Gaussian. With `s` the cluster
//! separation, the base layouts are:
//!
//! | geometry           | positive centers                              | negative centers      |
//! |--------------------|-----------------------------------------------|-----------------------|
//! | `AlongBoundary3`   | `(-s, s)`, `(0, s)`, `(s, s)`                 | `(0, 0)`              |
//! | `AlongBoundary2`   | `(-s/2, 0)`, `(s/2, 0)`                       | `(0, s)`, `(0, -s)`   |
//! | `ParallelOutside4` | `(s, ±s/2)`, `(2s, ±s/2)`                     | `(0, 0)`              |
//! | `ParallelInside2`  | `(-s/2, 0)`, `(s/2, 0)`                       | `(-3s/2, 0)`, `(3s/2, 0)` |
//!
//! "Along" layouts split the positives parallel to the class boundary,
//! "parallel" layouts split them across it (one subtype further from the
//! negatives than the other). In the `Outside` layouts the positive clusters
//! sit outside the convex region holding the negatives; in the `Inside`
//! layouts the negatives flank the positives, which sit inside the polytope
//! bounded by the per-cluster hyperplanes. The negative class has as many
//! samples as the positive class, split evenly over its blobs.

use super::{DataError, Dataset};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyGeometry {
    AlongBoundary3,
    AlongBoundary2,
    ParallelOutside4,
    ParallelInside2,
}

impl ToyGeometry {
    pub const ALL: [ToyGeometry; 4] = [
        ToyGeometry::AlongBoundary3,
        ToyGeometry::AlongBoundary2,
        ToyGeometry::ParallelOutside4,
        ToyGeometry::ParallelInside2,
    ];

    pub fn n_clusters(self) -> usize {
        match self {
            ToyGeometry::AlongBoundary3 => 3,
            ToyGeometry::AlongBoundary2 | ToyGeometry::ParallelInside2 => 2,
            ToyGeometry::ParallelOutside4 => 4,
        }
    }

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            ToyGeometry::AlongBoundary3 => "along3",
            ToyGeometry::AlongBoundary2 => "along2",
            ToyGeometry::ParallelOutside4 => "parallel-outside4",
            ToyGeometry::ParallelInside2 => "parallel-inside2",
        }
    }

    fn centers(self, s: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        match self {
            ToyGeometry::AlongBoundary3 => (vec![[-s, s], [0.0, s], [s, s]], vec![[0.0, 0.0]]),
            ToyGeometry::AlongBoundary2 => (vec![[-s / 2.0, 0.0], [s / 2.0, 0.0]], vec![[0.0, s], [0.0, -s]]),
            ToyGeometry::ParallelOutside4 => (
                vec![[s, -s / 2.0], [s, s / 2.0], [2.0 * s, -s / 2.0], [2.0 * s, s / 2.0]],
                vec![[0.0, 0.0]],
            ),
            ToyGeometry::ParallelInside2 => {
                (vec![[-s / 2.0, 0.0], [s / 2.0, 0.0]], vec![[-1.5 * s, 0.0], [1.5 * s, 0.0]])
            }
        }
    }
}

impl FromStr for ToyGeometry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToyGeometry::ALL
            .into_iter()
            .find(|g| g.short_name() == s || format!("{g:?}") == s)
            .ok_or_else(|| format!("unknown toy configuration `{s}` (expected one of along3, along2, parallel-outside4, parallel-inside2)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub config_id: ToyGeometry,
    pub n_per_cluster: usize,
    #[serde(default)]
    pub noise_dims: usize,
    #[serde(default = "default_separation")]
    pub cluster_separation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_separation() -> f64 {
    5.0
}

impl ToyConfig {
    /// 250 samples per cluster, separation 5, no noise features.
    pub fn new(config_id: ToyGeometry, seed: u64) -> Self {
        Self { config_id, n_per_cluster: 250, noise_dims: 0, cluster_separation: default_separation(), seed }
    }
}

pub fn generate_toy(config: &ToyConfig) -> Result<Dataset, DataError> {
    if config.n_per_cluster < 2 {
        return Err(DataError::Invalid("n_per_cluster must be at least 2".into()));
    }
    if !(config.cluster_separation > 0.0) {
        return Err(DataError::Invalid("cluster_separation must be positive".into()));
    }
    let (positives, negatives) = config.config_id.centers(config.cluster_separation);
    let n_pos = positives.len() * config.n_per_cluster;
    let n = 2 * n_pos;
    let d = 2 + config.noise_dims;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Array1::<f64>::zeros(n);
    let mut truth = Vec::with_capacity(n);

    // positives block by block, then negatives split evenly over their blobs
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(n);
    for (k, c) in positives.iter().enumerate() {
        centers.extend(std::iter::repeat_n(*c, config.n_per_cluster));
        truth.extend(std::iter::repeat_n(Some(k), config.n_per_cluster));
    }
    for (b, c) in negatives.iter().enumerate() {
        let share = n_pos / negatives.len() + usize::from(b < n_pos % negatives.len());
        centers.extend(std::iter::repeat_n(*c, share));
        truth.extend(std::iter::repeat_n(None, share));
    }
    for (i, (mut row, center)) in features.rows_mut().into_iter().zip(&centers).enumerate() {
        labels[i] = if i < n_pos { 1.0 } else { -1.0 };
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *v = if j < 2 { center[j] + z } else { z };
        }
    }
    Dataset::new(features, labels, Some(truth), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn along2_has_two_subtypes() {
        let d = generate_toy(&ToyConfig::new(ToyGeometry::AlongBoundary2, 1)).unwrap();
        assert_eq!(d.n_features(), 2);
        let mut subtypes = d.positive_subtypes().unwrap();
        subtypes.dedup();
        assert_eq!(subtypes, vec![0, 1]);
    }

    #[test]
    fn noise_dims_extend_features() {
        let cfg = ToyConfig { noise_dims: 20, ..ToyConfig::new(ToyGeometry::ParallelOutside4, 3) };
        assert_eq!(generate_toy(&cfg).unwrap().n_features(), 22);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = ToyConfig { noise_dims: 3, ..ToyConfig::new(ToyGeometry::AlongBoundary3, 11) };
        assert_eq!(generate_toy(&cfg).unwrap(), generate_toy(&cfg).unwrap());
        let other = ToyConfig { seed: 12, ..cfg };
        assert_ne!(generate_toy(&cfg).unwrap().features, generate_toy(&other).unwrap().features);
    }

    #[test]
    fn classes_are_balanced_and_clusters_exact() {
        for g in ToyGeometry::ALL {
            let cfg = ToyConfig { n_per_cluster: 31, ..ToyConfig::new(g, 0) };
            let d = generate_toy(&cfg).unwrap();
            let pos = d.positive_indices().len();
            assert_eq!(pos, 31 * g.n_clusters());
            assert_eq!(d.n_samples(), 2 * pos);
            let subtypes = d.positive_subtypes().unwrap();
            for k in 0..g.n_clusters() {
                assert_eq!(subtypes.iter().filter(|&&s| s == k).count(), 31);
            }
        }
    }

    #[test]
    fn rejects_tiny_clusters() {
        let cfg = ToyConfig { n_per_cluster: 1, ..ToyConfig::new(ToyGeometry::AlongBoundary2, 0) };
        assert!(generate_toy(&cfg).is_err());
    }

    #[test]
    fn parses_short_and_long_names() {
        assert_eq!("along2".parse::<ToyGeometry>().unwrap(), ToyGeometry::AlongBoundary2);
        assert_eq!("ParallelInside2".parse::<ToyGeometry>().unwrap(), ToyGeometry::ParallelInside2);
        assert!("nope".parse::<ToyGeometry>().is_err());
    }
}
