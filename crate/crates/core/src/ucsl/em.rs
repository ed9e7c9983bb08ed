//! One EM run: clustering initialization, then alternating M-steps (weighted
//! linear models) and E-steps (clustering in the discriminative subspace).

use super::{NegativeWeighting, UcslConfig, UcslError};
use crate::clustering::{ClusteringModel, ResponsibilityMatrix};
use crate::data::{is_binary, positive_indices};
use crate::estimators::{fit_weighted_with, FitError, LinearModel, SolverOptions};
use crate::metrics::adjusted_rand_index;
use crate::projection::{gram_schmidt, project, DirectionBasis, DEFAULT_TOLERANCE};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Column mass (relative to the row count it is spread over) below which a
/// column counts as empty.
const COLLAPSE_FRACTION: f64 = 1e-3;

/// Which rows are clustered: the positives for classification, every row
/// for regression.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Task {
    pub clustered: Vec<usize>,
    pub negatives: Vec<usize>,
    pub classification: bool,
}

impl Task {
    pub fn new(y: ArrayView1<f64>, config: &UcslConfig) -> Result<Self, UcslError> {
        if config.estimator_kind.is_classifier() {
            if !is_binary(y) {
                return Err(UcslError::NotBinary);
            }
            let clustered = positive_indices(y);
            let negatives = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
            Ok(Task { clustered, negatives, classification: true })
        } else {
            Ok(Task { clustered: (0..y.len()).collect(), negatives: Vec::new(), classification: false })
        }
    }

    fn check_size(&self, k: usize) -> Result<(), UcslError> {
        if self.clustered.len() < k {
            return Err(UcslError::InsufficientSamples { class: None, needed: k, got: self.clustered.len() });
        }
        if self.classification && self.negatives.is_empty() {
            return Err(UcslError::InsufficientSamples { class: None, needed: 1, got: 0 });
        }
        Ok(())
    }
}

/// Everything one EM run produces.
#[derive(Clone, Debug)]
pub struct EmRun {
    /// Hard labels of the clustered rows (positives for classification).
    pub labels: Vec<usize>,
    pub responsibilities: ResponsibilityMatrix,
    pub sub_models: Vec<LinearModel>,
    pub basis: DirectionBasis,
    pub cluster_model: ClusteringModel,
    pub n_iters: usize,
    pub converged: bool,
    /// ARI between consecutive hard labelings, one entry per E-step.
    pub ari_trace: Vec<f64>,
}

/// Clustering fit on the clustered rows in the raw feature space, posterior
/// evaluated on every row.
pub fn initialize_q(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig, seed: u64) -> Result<ResponsibilityMatrix, UcslError> {
    config.validate()?;
    let task = Task::new(y, config)?;
    task.check_size(config.n_clusters)?;
    initialize(x, &task, config, seed)
}

fn initialize(x: ArrayView2<f64>, task: &Task, config: &UcslConfig, seed: u64) -> Result<ResponsibilityMatrix, UcslError> {
    let rows = x.select(Axis(0), &task.clustered);
    let model = ClusteringModel::fit(config.clustering_method, rows.view(), config.n_clusters, seed, config.clustering_n_init)?;
    Ok(model.posterior(x)?)
}

/// One weighted linear model per column of `q`, fit on every row.
pub fn m_step(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    q: &ResponsibilityMatrix,
    config: &UcslConfig,
) -> Result<Vec<LinearModel>, UcslError> {
    let task = Task::new(y, config)?;
    m_step_task(x, y, q, &task, config, None)
}

/// Sample weights for column `k`: the responsibilities, with negatives
/// replaced by `1/K` under uniform weighting or when the column carries
/// almost no negative mass.
pub(crate) fn column_weights(q: &ResponsibilityMatrix, task: &Task, weighting: NegativeWeighting, k: usize) -> Array1<f64> {
    let mut w = q.column(k).to_owned();
    if !task.classification || task.negatives.is_empty() {
        return w;
    }
    let kk = q.n_clusters() as f64;
    let negative_mass: f64 = task.negatives.iter().map(|&i| w[i]).sum();
    let starved = negative_mass < COLLAPSE_FRACTION * task.negatives.len() as f64 / kk;
    if weighting == NegativeWeighting::Uniform || starved {
        for &i in &task.negatives {
            w[i] = 1.0 / kk;
        }
    }
    w
}

pub(crate) fn m_step_task(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    q: &ResponsibilityMatrix,
    task: &Task,
    config: &UcslConfig,
    warm: Option<&[LinearModel]>,
) -> Result<Vec<LinearModel>, UcslError> {
    (0..q.n_clusters())
        .map(|k| {
            let w = column_weights(q, task, config.negative_weighting, k);
            fit_weighted_with(
                config.estimator_kind,
                x,
                y,
                w.view(),
                config.regularization,
                &SolverOptions::default(),
                warm.and_then(|m| m.get(k)),
            )
            .map_err(|e| match e {
                FitError::DegenerateWeights { .. } => UcslError::ClusterCollapse { cluster: k, source: e },
                other => UcslError::Fit(other),
            })
        })
        .collect()
}

/// Reassigns the highest-entropy clustered rows to any column whose mass on
/// those rows dropped below `1e-3 × count`. Returns the revived columns.
pub(crate) fn revive_collapsed(q: &mut ResponsibilityMatrix, task: &Task) -> Vec<usize> {
    let k = q.n_clusters();
    let m = task.clustered.len();
    if k < 2 || m == 0 {
        return Vec::new();
    }
    let share = m.div_ceil(k);
    let mut revived = Vec::new();
    let mut used = vec![false; m];
    for c in 0..k {
        let mass: f64 = task.clustered.iter().map(|&i| q.values()[[i, c]]).sum();
        if mass >= COLLAPSE_FRACTION * m as f64 {
            continue;
        }
        let entropy: Vec<f64> = task
            .clustered
            .iter()
            .map(|&i| q.row(i).iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
            .collect();
        let mut order: Vec<usize> = (0..m).filter(|&j| !used[j]).collect();
        order.sort_by(|&a, &b| entropy[b].total_cmp(&entropy[a]).then(a.cmp(&b)));
        let values = q.values_mut();
        for &j in order.iter().take(share) {
            used[j] = true;
            let mut row = values.row_mut(task.clustered[j]);
            row.fill(0.0);
            row[c] = 1.0;
        }
        revived.push(c);
    }
    revived
}

/// Normals → orthonormal basis → projection → clustering of the projected
/// clustered rows → posterior on every row.
pub fn e_step(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    sub_models: &[LinearModel],
    config: &UcslConfig,
    seed: u64,
) -> Result<(ResponsibilityMatrix, DirectionBasis, ClusteringModel), UcslError> {
    let task = Task::new(y, config)?;
    e_step_task(x, sub_models, &task, config, seed)
}

pub(crate) fn normals(sub_models: &[LinearModel]) -> Result<Array2<f64>, UcslError> {
    let first = sub_models.first().ok_or(UcslError::InvalidConfig("no sub-models".into()))?;
    let mut d = Array2::zeros((sub_models.len(), first.weights.len()));
    for (k, m) in sub_models.iter().enumerate() {
        d.row_mut(k).assign(&m.weights);
    }
    Ok(d)
}

pub(crate) fn e_step_task(
    x: ArrayView2<f64>,
    sub_models: &[LinearModel],
    task: &Task,
    config: &UcslConfig,
    seed: u64,
) -> Result<(ResponsibilityMatrix, DirectionBasis, ClusteringModel), UcslError> {
    let basis = gram_schmidt(normals(sub_models)?.view(), DEFAULT_TOLERANCE)?;
    let projected = project(x, &basis)?;
    let rows = projected.select(Axis(0), &task.clustered);
    let model = ClusteringModel::fit(config.clustering_method, rows.view(), config.n_clusters, seed, config.clustering_n_init)?;
    let q = model.posterior(projected.view())?;
    Ok((q, basis, model))
}

/// A full EM run from a fresh clustering initialization. All randomness is
/// drawn from `seed`.
pub fn run_em_once(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig, seed: u64) -> Result<EmRun, UcslError> {
    config.validate()?;
    let task = Task::new(y, config)?;
    task.check_size(config.n_clusters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q0 = initialize(x, &task, config, rng.next_u64())?;
    run_em_from(x, y, &task, config, q0, &mut rng)
}

pub(crate) fn run_em_from(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    task: &Task,
    config: &UcslConfig,
    mut q: ResponsibilityMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<EmRun, UcslError> {
    let mut previous = q.select_rows(&task.clustered).hard_labels();
    let mut sub_models: Option<Vec<LinearModel>> = None;
    let mut ari_trace = Vec::new();
    let mut last = None;
    for t in 1..=config.max_em_iter {
        revive_collapsed(&mut q, task);
        let models = m_step_task(x, y, &q, task, config, sub_models.as_deref())?;
        let (next_q, basis, cluster_model) = e_step_task(x, &models, task, config, rng.next_u64())?;
        let labels = next_q.select_rows(&task.clustered).hard_labels();
        let ari = if labels.len() >= 2 { adjusted_rand_index(&previous, &labels)? } else { 1.0 };
        ari_trace.push(ari);
        let converged = ari >= config.stop_ari;
        q = next_q;
        sub_models = Some(models.clone());
        previous = labels;
        last = Some((models, basis, cluster_model, t, converged));
        if converged {
            break;
        }
    }
    let (sub_models, basis, cluster_model, n_iters, converged) = last.expect("max_em_iter >= 1");
    Ok(EmRun { labels: previous, responsibilities: q, sub_models, basis, cluster_model, n_iters, converged, ari_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn task_of(y: &Array1<f64>) -> Task {
        Task::new(y.view(), &UcslConfig::default()).unwrap()
    }

    #[test]
    fn uniform_weighting_overrides_negatives() {
        let y = array![1.0, 1.0, -1.0, -1.0];
        let q = ResponsibilityMatrix::new(array![[1.0, 0.0], [0.0, 1.0], [0.9, 0.1], [0.2, 0.8]]).unwrap();
        let task = task_of(&y);
        let w = column_weights(&q, &task, NegativeWeighting::Uniform, 0);
        assert_eq!(w, array![1.0, 0.0, 0.5, 0.5]);
        let w = column_weights(&q, &task, NegativeWeighting::PosteriorExtension, 0);
        assert_eq!(w, array![1.0, 0.0, 0.9, 0.2]);
    }

    #[test]
    fn starved_column_falls_back_to_uniform_negatives() {
        let y = array![1.0, 1.0, -1.0, -1.0];
        let q = ResponsibilityMatrix::new(array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let w = column_weights(&q, &task_of(&y), NegativeWeighting::PosteriorExtension, 1);
        assert_eq!(w, array![0.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn collapsed_column_is_revived() {
        let y = array![1.0, 1.0, 1.0, 1.0, -1.0];
        let mut q = ResponsibilityMatrix::new(array![[1.0, 0.0], [0.6, 0.4], [0.9, 0.1], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        // column 1 holds 0.5 of 4 positives: fine
        assert!(revive_collapsed(&mut q, &task_of(&y)).is_empty());
        let mut q = ResponsibilityMatrix::new(array![[1.0, 0.0], [0.9995, 0.0005], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(revive_collapsed(&mut q, &task_of(&y)), vec![1]);
        // the two most uncertain positives (row 1, then row 0 by index) move
        assert_eq!(q.hard_labels(), vec![1, 1, 0, 0, 0]);
        assert!(q.is_row_stochastic(1e-12));
    }
}
