//! Ensemble aggregation: co-occurrence affinity over several labelings and
//! spectral clustering of that affinity.

use crate::clustering::{fit_kmeans, ClusteringError};
use crate::linalg::symmetric_eigen;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use std::collections::VecDeque;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum ConsensusError {
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("run {run} has {actual} labels, expected {expected}")]
    LengthMismatch { run: usize, expected: usize, actual: usize },
    #[error("affinity must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("cannot form {k} clusters from {m} samples")]
    TooManyClusters { k: usize, m: usize },
    #[error("affinity has no off-diagonal mass")]
    NoEdges,
    #[error("eigensolver produced non-finite values")]
    Eigen,
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error("writing affinity: {0}")]
    Io(#[from] std::io::Error),
}

/// Pairwise fraction of runs in which two samples share a cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceMatrix {
    pub values: Array2<f64>,
    pub n_runs: usize,
}

impl CooccurrenceMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Headerless CSV, one matrix row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ConsensusError> {
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn cooccurrence(runs: &[Vec<usize>]) -> Result<CooccurrenceMatrix, ConsensusError> {
    let first = runs.first().ok_or(ConsensusError::NoRuns)?;
    let m = first.len();
    for (r, run) in runs.iter().enumerate() {
        if run.len() != m {
            return Err(ConsensusError::LengthMismatch { run: r, expected: m, actual: run.len() });
        }
    }
    let mut counts = vec![0u32; m * m];
    for run in runs {
        for i in 0..m {
            for j in i..m {
                if run[i] == run[j] {
                    counts[i * m + j] += 1;
                }
            }
        }
    }
    let n_runs = runs.len();
    let mut values = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let v = counts[i * m + j] as f64 / n_runs as f64;
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(CooccurrenceMatrix { values, n_runs })
}

/// `I - D^(-1/2) A D^(-1/2)` with `D` the row sums of `A`; zero-degree rows
/// keep a unit diagonal.
pub fn normalized_laplacian(affinity: ArrayView2<f64>) -> Array2<f64> {
    let m = affinity.nrows();
    let inv_sqrt: Array1<f64> = affinity.sum_axis(Axis(1)).mapv(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
    let mut l = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            let scaled = inv_sqrt[i] * affinity[[i, j]] * inv_sqrt[j];
            l[[i, j]] = if i == j { 1.0 - scaled } else { -scaled };
        }
    }
    l
}

/// Eigenvalues (ascending) and eigenvectors (columns) of the normalized
/// Laplacian.
pub fn laplacian_spectrum(affinity: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    symmetric_eigen(normalized_laplacian(affinity).view())
}

/// Connected components over positive off-diagonal entries, numbered by
/// their smallest member.
pub fn connected_components(affinity: ArrayView2<f64>) -> Vec<usize> {
    let m = affinity.nrows();
    let mut component = vec![usize::MAX; m];
    let mut next = 0;
    for start in 0..m {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..m {
                if j != i && affinity[[i, j]] > 0.0 && component[j] == usize::MAX {
                    component[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    component
}

/// Relabels so that labels appear in order 0, 1, 2, ... along the rows.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Spectral clustering of a symmetric non-negative affinity.
///
/// Bottom-`k` eigenvectors of the normalized Laplacian, rows scaled to unit
/// length, clustered by seeded k-means. Rows with no off-diagonal affinity
/// join the largest cluster afterwards. When the graph already has at least
/// `k` connected components, whole components are assigned instead: the
/// `k - 1` largest get their own label and the rest share the last one.
/// Labels are numbered by first appearance.
pub fn spectral_clustering(affinity: ArrayView2<f64>, k: usize, seed: u64) -> Result<Vec<usize>, ConsensusError> {
    let (rows, cols) = affinity.dim();
    if rows != cols {
        return Err(ConsensusError::NotSquare { rows, cols });
    }
    let m = rows;
    if k == 0 || k > m {
        return Err(ConsensusError::TooManyClusters { k, m });
    }
    if k == 1 {
        return Ok(vec![0; m]);
    }
    let connected: Vec<usize> = (0..m).filter(|&i| (0..m).any(|j| j != i && affinity[[i, j]] > 0.0)).collect();
    if connected.is_empty() {
        return Err(ConsensusError::NoEdges);
    }
    let sub = affinity.select(Axis(0), &connected).select(Axis(1), &connected);
    let components = connected_components(sub.view());
    let n_components = components.iter().max().map_or(0, |c| c + 1);

    let sub_labels = if n_components >= k {
        assign_components(&components, n_components, k)
    } else if connected.len() < k {
        return Err(ConsensusError::TooManyClusters { k, m: connected.len() });
    } else {
        let (values, vectors) = laplacian_spectrum(sub.view());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConsensusError::Eigen);
        }
        let mut embedding = vectors.slice(ndarray::s![.., ..k]).to_owned();
        for mut row in embedding.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
        fit_kmeans(embedding.view(), k, seed, 10)?.labels(embedding.view())?
    };

    let mut labels = vec![usize::MAX; m];
    for (&i, &l) in connected.iter().zip(&sub_labels) {
        labels[i] = l;
    }
    if connected.len() < m {
        let mut sizes = vec![0usize; k];
        for &l in &sub_labels {
            sizes[l] += 1;
        }
        let largest = (0..k).fold(0, |b, c| if sizes[c] > sizes[b] { c } else { b });
        for l in labels.iter_mut().filter(|l| **l == usize::MAX) {
            *l = largest;
        }
    }
    Ok(canonicalize(&labels))
}

fn assign_components(components: &[usize], n_components: usize, k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; n_components];
    for &c in components {
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..n_components).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut label_of = vec![k - 1; n_components];
    for (rank, &c) in order.iter().take(k - 1).enumerate() {
        label_of[c] = rank;
    }
    components.iter().map(|&c| label_of[c]).collect()
}
