use super::{check_fit_input, squared_distance, ClusteringError, ResponsibilityMatrix};
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmeansModel {
    #[serde(with = "crate::serde_arrays::matrix")]
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the kept run.
    #[serde(skip)]
    pub inertia_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct KmeansOptions {
    pub max_iter: usize,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self { max_iter: 300 }
    }
}

impl KmeansModel {
    pub fn n_clusters(&self) -> usize {
        self.centroids.nrows()
    }

    /// Index of the nearest centroid for every row (ties to the lowest index).
    pub fn labels(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, ClusteringError> {
        if x.ncols() != self.centroids.ncols() {
            return Err(ClusteringError::DimensionMismatch { expected: self.centroids.ncols(), actual: x.ncols() });
        }
        Ok(assign(x, &self.centroids).0)
    }

    /// Sum of squared distances of each row to its nearest centroid.
    pub fn inertia_of(x: ArrayView2<f64>, centroids: &Array2<f64>) -> f64 {
        assign(x, centroids).1.sum()
    }

    pub(crate) fn from_partition(x: ArrayView2<f64>, labels: &[usize], k: usize) -> Self {
        let centroids = means(x, labels, k);
        let inertia = labels.iter().enumerate().map(|(i, &l)| squared_distance(x.row(i), centroids.row(l))).sum();
        KmeansModel { centroids, inertia, inertia_trace: Vec::new() }
    }
}

pub fn kmeans_assign(model: &KmeansModel, x: ArrayView2<f64>) -> Result<ResponsibilityMatrix, ClusteringError> {
    Ok(ResponsibilityMatrix::one_hot(&model.labels(x)?, model.n_clusters()))
}

pub fn fit_kmeans(x: ArrayView2<f64>, k: usize, seed: u64, n_init: usize) -> Result<KmeansModel, ClusteringError> {
    fit_kmeans_with(x, k, seed, n_init, &KmeansOptions::default())
}

/// Lloyd's algorithm from `n_init` k-means++ seedings; keeps the run with the
/// lowest inertia (first one on ties).
pub fn fit_kmeans_with(
    x: ArrayView2<f64>,
    k: usize,
    seed: u64,
    n_init: usize,
    options: &KmeansOptions,
) -> Result<KmeansModel, ClusteringError> {
    check_fit_input(x, k)?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KmeansModel> = None;
    for _ in 0..n_init.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let model = lloyd(x, kmeans_plus_plus(x, k, &mut rng), options.max_iter);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one initialization"))
}

/// D² seeding. Already-chosen rows have zero weight, so with at least `k`
/// distinct rows the seeds are distinct.
pub(crate) fn kmeans_plus_plus(x: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centroids = Array2::<f64>::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut d2: Array1<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total = d2.sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            while d2[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(squared_distance(x.row(i), x.row(pick)));
        }
    }
    centroids
}

fn assign(x: ArrayView2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Array1<f64>) {
    let n = x.nrows();
    let mut labels = vec![0; n];
    let mut dist = Array1::zeros(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let d = squared_distance(x.row(i), centroid);
            if d < best {
                best = d;
                labels[i] = c;
            }
        }
        dist[i] = best;
    }
    (labels, dist)
}

fn means(x: ArrayView2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        let mut row = sums.row_mut(l);
        row += &x.row(i);
        counts[l] += 1;
    }
    for (c, mut row) in sums.rows_mut().into_iter().enumerate() {
        if counts[c] > 0 {
            row.mapv_inplace(|v| v / counts[c] as f64);
        }
    }
    sums
}

pub(crate) fn lloyd(x: ArrayView2<f64>, mut centroids: Array2<f64>, max_iter: usize) -> KmeansModel {
    let k = centroids.nrows();
    let mut trace = Vec::new();
    let (mut labels, mut dist) = assign(x, &centroids);
    trace.push(dist.sum());
    for _ in 0..max_iter {
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let mut next = means(x, &labels, k);
        // empty clusters take over the points farthest from their centroids
        let mut taken = Vec::new();
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..x.nrows())
                .filter(|i| !taken.contains(i))
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                })
                .expect("n >= k");
            taken.push(far);
            next.row_mut(c).assign(&x.row(far));
        }
        centroids = next;
        let (new_labels, new_dist) = assign(x, &centroids);
        trace.push(new_dist.sum());
        let stable = new_labels == labels && taken.is_empty();
        labels = new_labels;
        dist = new_dist;
        if stable {
            break;
        }
    }
    KmeansModel { centroids, inertia: dist.sum(), inertia_trace: trace }
}
