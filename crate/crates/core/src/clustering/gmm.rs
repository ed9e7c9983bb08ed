use super::kmeans::{kmeans_plus_plus, lloyd};
use super::{check_fit_input, ClusteringError, ResponsibilityMatrix};
use crate::linalg::{cholesky, log_sum_exp, lower_triangular_inverse, symmetric_eigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Full-covariance Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    #[serde(with = "crate::serde_arrays::matrix")]
    pub means: Array2<f64>,
    #[serde(with = "crate::serde_arrays::matrix_list")]
    pub covariances: Vec<Array2<f64>>,
    #[serde(with = "crate::serde_arrays::vector")]
    pub mixing_weights: Array1<f64>,
    /// Total log-likelihood of the training data under the returned model.
    pub fit_log_likelihood: f64,
    /// Minimum eigenvalue enforced on every covariance.
    pub covariance_floor: f64,
    /// Total log-likelihood at every E-step of the kept run.
    #[serde(skip)]
    pub log_likelihood_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Stop once the mean per-sample log-likelihood changes by less than this.
    pub tol: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-3 }
    }
}

/// `1e-6 ×` the mean per-feature variance of `x` (or `1e-6` for constant data).
pub(crate) fn covariance_floor(x: ArrayView2<f64>) -> f64 {
    let var = x.var_axis(Axis(0), 0.0).mean().unwrap_or(0.0);
    if var > 0.0 {
        1e-6 * var
    } else {
        1e-6
    }
}

/// Raises every eigenvalue below `floor` to `floor`. Skipped when `Σ - floor·I`
/// already factors, so an unconstrained M-step stays exact.
fn apply_floor(cov: Array2<f64>, floor: f64) -> Array2<f64> {
    let p = cov.nrows();
    let shifted = &cov - &(Array2::<f64>::eye(p) * floor);
    if cholesky(shifted.view()).is_some() {
        return cov;
    }
    let (values, vectors) = symmetric_eigen(cov.view());
    let clipped = values.mapv(|v| v.max(floor));
    let scaled = &vectors * &clipped.view().insert_axis(Axis(0));
    let out = scaled.dot(&vectors.t());
    (&out + &out.t()) * 0.5
}

impl GmmModel {
    pub fn n_components(&self) -> usize {
        self.means.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.means.ncols()
    }

    /// One M-step: weighted means, floored covariances and mixing weights.
    pub fn from_responsibilities(x: ArrayView2<f64>, resp: &ResponsibilityMatrix, floor: f64) -> Self {
        let mut model = Self::m_step(x, resp, floor);
        model.fit_log_likelihood = model.score_samples(x).map(|s| s.sum()).unwrap_or(f64::NAN);
        model
    }

    fn m_step(x: ArrayView2<f64>, resp: &ResponsibilityMatrix, floor: f64) -> Self {
        let k = resp.n_clusters();
        let r = resp.values();
        let nk: Array1<f64> = r.sum_axis(Axis(0)).mapv(|v| v.max(10.0 * f64::EPSILON));
        let mut means = r.t().dot(&x);
        for (c, mut row) in means.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v / nk[c]);
        }
        let mut covariances = Vec::with_capacity(k);
        for c in 0..k {
            let root = r.column(c).mapv(f64::sqrt);
            let centered = &x - &means.row(c).insert_axis(Axis(0));
            let weighted = &centered * &root.view().insert_axis(Axis(1));
            let cov = weighted.t().dot(&weighted) / nk[c];
            let cov = (&cov + &cov.t()) * 0.5;
            covariances.push(apply_floor(cov, floor));
        }
        let mixing_weights = &nk / nk.sum();
        GmmModel {
            means,
            covariances,
            mixing_weights,
            fit_log_likelihood: f64::NAN,
            covariance_floor: floor,
            log_likelihood_trace: Vec::new(),
        }
    }

    /// `log π_k + log N(x | μ_k, Σ_k)` for every row and component.
    pub fn log_joint(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ClusteringError> {
        let p = self.n_features();
        if x.ncols() != p {
            return Err(ClusteringError::DimensionMismatch { expected: p, actual: x.ncols() });
        }
        let k = self.n_components();
        let mut out = Array2::<f64>::zeros((x.nrows(), k));
        for c in 0..k {
            let l = cholesky(self.covariances[c].view())
                .or_else(|| cholesky(apply_floor(self.covariances[c].clone(), self.covariance_floor.max(f64::MIN_POSITIVE)).view()))
                .ok_or_else(|| ClusteringError::InvalidInput(format!("covariance {c} is not positive definite")))?;
            let log_det: f64 = 2.0 * l.diag().mapv(f64::ln).sum();
            let l_inv = lower_triangular_inverse(&l);
            let centered = &x - &self.means.row(c).insert_axis(Axis(0));
            let z = centered.dot(&l_inv.t());
            let base = self.mixing_weights[c].ln() - 0.5 * (p as f64 * LN_2PI + log_det);
            for (i, zi) in z.rows().into_iter().enumerate() {
                out[[i, c]] = base - 0.5 * zi.dot(&zi);
            }
        }
        Ok(out)
    }

    /// Log marginal density `log p(x)` of every row.
    pub fn score_samples(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, ClusteringError> {
        let lj = self.log_joint(x)?;
        Ok(lj.rows().into_iter().map(|r| log_sum_exp(r.as_slice().expect("standard layout"))).collect())
    }
}

pub fn gmm_posterior(model: &GmmModel, x: ArrayView2<f64>) -> Result<ResponsibilityMatrix, ClusteringError> {
    Ok(ResponsibilityMatrix::from_log_weights(model.log_joint(x)?))
}

pub fn fit_gmm(x: ArrayView2<f64>, k: usize, seed: u64, n_init: usize) -> Result<GmmModel, ClusteringError> {
    fit_gmm_with(x, k, seed, n_init, &GmmOptions::default())
}

/// EM from `n_init` k-means++/Lloyd initializations; keeps the run with the
/// highest final log-likelihood (first one on ties).
pub fn fit_gmm_with(x: ArrayView2<f64>, k: usize, seed: u64, n_init: usize, options: &GmmOptions) -> Result<GmmModel, ClusteringError> {
    check_fit_input(x, k)?;
    let floor = covariance_floor(x);
    let n = x.nrows() as f64;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<GmmModel> = None;
    for _ in 0..n_init.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let init = lloyd(x, kmeans_plus_plus(x, k, &mut rng), 300);
        let labels = init.labels(x)?;
        let mut model = GmmModel::m_step(x, &ResponsibilityMatrix::one_hot(&labels, k), floor);
        let mut trace = Vec::new();
        let mut previous = f64::NEG_INFINITY;
        for _ in 0..options.max_iter.max(1) {
            let lj = model.log_joint(x)?;
            let ll: f64 = lj.rows().into_iter().map(|r| log_sum_exp(r.as_slice().expect("standard layout"))).sum();
            trace.push(ll);
            let resp = ResponsibilityMatrix::from_log_weights(lj);
            let next = GmmModel::m_step(x, &resp, floor);
            let converged = (ll - previous).abs() / n < options.tol;
            previous = ll;
            if converged {
                break;
            }
            model = next;
        }
        model.fit_log_likelihood = *trace.last().expect("max_iter >= 1");
        model.log_likelihood_trace = trace;
        if best.as_ref().is_none_or(|b| model.fit_log_likelihood > b.fit_log_likelihood) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one initialization"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_component_is_the_sample_mean() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [-2.0, 4.0]];
        let m = fit_gmm(x.view(), 1, 3, 1).unwrap();
        let mean = x.mean_axis(Axis(0)).unwrap();
        for j in 0..2 {
            assert!((m.means[[0, j]] - mean[j]).abs() < 1e-14);
        }
        let post = gmm_posterior(&m, x.view()).unwrap();
        assert!(post.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn floor_holds_on_collapsed_data() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [2.0, 2.0], [2.0, 2.0]];
        let m = fit_gmm(x.view(), 2, 0, 2).unwrap();
        for cov in &m.covariances {
            let (vals, _) = symmetric_eigen(cov.view());
            assert!(vals[0] >= m.covariance_floor * (1.0 - 1e-9));
        }
        assert!((m.mixing_weights.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let x = array![[0.0], [1.0], [5.0]];
        let m = fit_gmm(x.view(), 1, 0, 1).unwrap();
        assert!(matches!(gmm_posterior(&m, array![[0.0, 1.0]].view()), Err(ClusteringError::DimensionMismatch { .. })));
    }
}
