//! Clustering primitives: full-covariance GMM and k-means, both seeded with
//! k-means++, plus the responsibility matrix they produce.

mod gmm;
mod kmeans;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use gmm::{fit_gmm, fit_gmm_with, gmm_posterior, GmmModel, GmmOptions};
pub use kmeans::{fit_kmeans, fit_kmeans_with, kmeans_assign, KmeansModel, KmeansOptions};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusteringMethod {
    #[default]
    Gmm,
    Kmeans,
}

impl std::str::FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gmm" => Ok(ClusteringMethod::Gmm),
            "kmeans" | "k-means" => Ok(ClusteringMethod::Kmeans),
            _ => Err(format!("unknown clustering method `{s}` (expected gmm or kmeans)")),
        }
    }
}

/// `n × K` matrix of cluster responsibilities, rows summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponsibilityMatrix(Array2<f64>);

/// Row sums must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl ResponsibilityMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, ClusteringError> {
        if values.ncols() == 0 {
            return Err(ClusteringError::InvalidInput("responsibilities need at least one column".into()));
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(ClusteringError::InvalidInput("responsibilities must lie in [0, 1]".into()));
        }
        let m = ResponsibilityMatrix(values);
        if !m.is_row_stochastic(ROW_SUM_TOLERANCE) {
            return Err(ClusteringError::InvalidInput("responsibility rows must sum to 1".into()));
        }
        Ok(m)
    }

    /// Rows of `log_weights` turned into probabilities with log-sum-exp.
    pub(crate) fn from_log_weights(log_weights: Array2<f64>) -> Self {
        let mut values = log_weights;
        for mut row in values.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        ResponsibilityMatrix(values)
    }

    /// Uniform `1/K` rows.
    pub fn uniform(n: usize, k: usize) -> Self {
        ResponsibilityMatrix(Array2::from_elem((n, k), 1.0 / k as f64))
    }

    /// Hard labels as one-hot rows.
    pub fn one_hot(labels: &[usize], k: usize) -> Self {
        let mut values = Array2::zeros((labels.len(), k));
        for (i, &l) in labels.iter().enumerate() {
            values[[i, l]] = 1.0;
        }
        ResponsibilityMatrix(values)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, k: usize) -> ArrayView1<'_, f64> {
        self.0.column(k)
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    /// Argmax of every row; ties go to the lowest cluster index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.0.rows().into_iter().map(argmax).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ResponsibilityMatrix(self.0.select(Axis(0), rows))
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.0.rows().into_iter().all(|r| (r.sum() - 1.0).abs() <= tol)
    }

    /// Overwrites the given rows with rows of `other` (same `K`).
    pub(crate) fn assign_rows(&mut self, rows: &[usize], other: &ResponsibilityMatrix) {
        for (src, &dst) in rows.iter().enumerate() {
            self.0.row_mut(dst).assign(&other.0.row(src));
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }
}

pub(crate) fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// A fitted clustering model over some feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClusteringModel {
    Gmm(GmmModel),
    Kmeans(KmeansModel),
}

impl ClusteringModel {
    pub fn fit(method: ClusteringMethod, x: ArrayView2<f64>, k: usize, seed: u64, n_init: usize) -> Result<Self, ClusteringError> {
        Ok(match method {
            ClusteringMethod::Gmm => ClusteringModel::Gmm(fit_gmm(x, k, seed, n_init)?),
            ClusteringMethod::Kmeans => ClusteringModel::Kmeans(fit_kmeans(x, k, seed, n_init)?),
        })
    }

    /// Parameters estimated directly from a hard partition (one M-step for
    /// the GMM, cluster means for k-means). Every label must be `< k` and
    /// every cluster non-empty.
    pub fn from_partition(method: ClusteringMethod, x: ArrayView2<f64>, labels: &[usize], k: usize) -> Result<Self, ClusteringError> {
        if labels.len() != x.nrows() {
            return Err(ClusteringError::DimensionMismatch { expected: x.nrows(), actual: labels.len() });
        }
        let mut counts = vec![0usize; k];
        for &l in labels {
            if l >= k {
                return Err(ClusteringError::InvalidInput(format!("label {l} out of range for {k} clusters")));
            }
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(ClusteringError::InvalidInput(format!("cluster {empty} is empty")));
        }
        let resp = ResponsibilityMatrix::one_hot(labels, k);
        Ok(match method {
            ClusteringMethod::Gmm => ClusteringModel::Gmm(GmmModel::from_responsibilities(x, &resp, gmm::covariance_floor(x))),
            ClusteringMethod::Kmeans => ClusteringModel::Kmeans(KmeansModel::from_partition(x, labels, k)),
        })
    }

    pub fn method(&self) -> ClusteringMethod {
        match self {
            ClusteringModel::Gmm(_) => ClusteringMethod::Gmm,
            ClusteringModel::Kmeans(_) => ClusteringMethod::Kmeans,
        }
    }

    pub fn n_clusters(&self) -> usize {
        match self {
            ClusteringModel::Gmm(m) => m.means.nrows(),
            ClusteringModel::Kmeans(m) => m.centroids.nrows(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClusteringModel::Gmm(m) => m.means.ncols(),
            ClusteringModel::Kmeans(m) => m.centroids.ncols(),
        }
    }

    /// Soft posterior for the GMM, one-hot nearest-centroid rows for k-means.
    pub fn posterior(&self, x: ArrayView2<f64>) -> Result<ResponsibilityMatrix, ClusteringError> {
        match self {
            ClusteringModel::Gmm(m) => gmm_posterior(m, x),
            ClusteringModel::Kmeans(m) => kmeans_assign(m, x),
        }
    }
}

pub(crate) fn check_fit_input(x: ArrayView2<f64>, k: usize) -> Result<(), ClusteringError> {
    if k == 0 {
        return Err(ClusteringError::InvalidInput("number of clusters must be positive".into()));
    }
    if x.ncols() == 0 {
        return Err(ClusteringError::InvalidInput("need at least one feature".into()));
    }
    if x.nrows() < k {
        return Err(ClusteringError::InsufficientSamples { needed: k, got: x.nrows() });
    }
    Ok(())
}

pub(crate) fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}
