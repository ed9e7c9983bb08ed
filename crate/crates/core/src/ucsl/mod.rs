//! The EM ensemble: configuration, fitting, consensus refinement and
//! prediction.

mod em;

pub use em::{e_step, initialize_q, m_step, run_em_once, EmRun};

use crate::clustering::{ClusteringError, ClusteringMethod, ClusteringModel, ResponsibilityMatrix};
use crate::consensus::{cooccurrence, spectral_clustering, ConsensusError};
use crate::estimators::{EstimatorKind, FitError, LinearModel};
use crate::metrics::MetricError;
use crate::par::{map_indexed, Execution};
use crate::projection::{gram_schmidt, project, DirectionBasis, ProjectionError, DEFAULT_TOLERANCE};
use crate::SCHEMA_VERSION;
use em::{m_step_task, normals, revive_collapsed, run_em_from, Task};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NegativeWeighting {
    /// Negatives keep their clustering posterior.
    #[default]
    PosteriorExtension,
    /// Negatives get `1/K` in every column.
    Uniform,
}

impl std::str::FromStr for NegativeWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "posterior-extension" | "posterior" | "posteriorextension" => Ok(NegativeWeighting::PosteriorExtension),
            "uniform" => Ok(NegativeWeighting::Uniform),
            _ => Err(format!("unknown negative weighting `{s}` (expected posterior-extension or uniform)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UcslConfig {
    pub n_clusters: usize,
    pub n_ensembles: usize,
    pub max_em_iter: usize,
    /// EM stops once consecutive hard labelings reach this ARI.
    pub stop_ari: f64,
    pub clustering_method: ClusteringMethod,
    pub estimator_kind: EstimatorKind,
    pub negative_weighting: NegativeWeighting,
    /// Inverse regularization strength of the linear models.
    pub regularization: f64,
    pub seed: u64,
    /// Initializations per clustering fit inside EM.
    pub clustering_n_init: usize,
}

impl Default for UcslConfig {
    fn default() -> Self {
        Self {
            n_clusters: 2,
            n_ensembles: 10,
            max_em_iter: 30,
            stop_ari: 0.85,
            clustering_method: ClusteringMethod::Gmm,
            estimator_kind: EstimatorKind::Logistic,
            negative_weighting: NegativeWeighting::PosteriorExtension,
            regularization: 1.0,
            seed: 0,
            clustering_n_init: 1,
        }
    }
}

impl UcslConfig {
    pub fn validate(&self) -> Result<(), UcslError> {
        let bad = |msg: &str| Err(UcslError::InvalidConfig(msg.to_string()));
        if self.n_clusters == 0 {
            return bad("n_clusters must be at least 1");
        }
        if self.n_ensembles == 0 {
            return bad("n_ensembles must be at least 1");
        }
        if self.max_em_iter == 0 {
            return bad("max_em_iter must be at least 1");
        }
        // 0 is accepted: it stops after the first E-step
        if !(0.0..=1.0).contains(&self.stop_ari) {
            return bad("stop_ari must lie in [0, 1]");
        }
        if !(self.regularization > 0.0) || !self.regularization.is_finite() {
            return bad("regularization must be positive");
        }
        if self.clustering_n_init == 0 {
            return bad("clustering_n_init must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum UcslError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("classification labels must be -1 or +1")]
    NotBinary,
    #[error("{}need at least {needed} samples, got {got}", class.map(|c| format!("class {c}: ")).unwrap_or_default())]
    InsufficientSamples { class: Option<usize>, needed: usize, got: usize },
    #[error("cluster {cluster} collapsed: {source}")]
    ClusterCollapse { cluster: usize, source: FitError },
    #[error("{failed} of {total} ensemble runs failed; first failure: {first}")]
    EnsembleFailed { failed: usize, total: usize, first: String },
    #[error("dimension mismatch: model expects {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Outcome of one ensemble member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub seed: u64,
    pub n_iters: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcslModel {
    pub schema_version: u32,
    pub config: UcslConfig,
    pub n_features: usize,
    pub sub_models: Vec<LinearModel>,
    pub basis: DirectionBasis,
    pub cluster_model: ClusteringModel,
    /// Cluster of every clustered training row (positives for
    /// classification) after the final EM pass.
    pub consensus_labels: Vec<usize>,
    /// Spectral consensus of the ensemble, before the final EM pass.
    pub ensemble_labels: Vec<usize>,
    /// EM iterations of the final pass.
    pub n_em_iters_run: usize,
    pub converged: bool,
    pub members: Vec<MemberSummary>,
}

impl UcslModel {
    fn check_dim(&self, x: ArrayView2<f64>) -> Result<(), UcslError> {
        if x.ncols() != self.n_features {
            return Err(UcslError::DimensionMismatch { expected: self.n_features, actual: x.ncols() });
        }
        Ok(())
    }

    /// `p(c | x)` from the projected clustering model.
    pub fn cluster_posterior(&self, x: ArrayView2<f64>) -> Result<ResponsibilityMatrix, UcslError> {
        self.check_dim(x)?;
        Ok(self.cluster_model.posterior(project(x, &self.basis)?.view())?)
    }

    /// `p(y = +1 | x) = Σ_k p(c_k | x) · p(y = +1 | x, c_k)`.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, UcslError> {
        let post = self.cluster_posterior(x)?;
        let mut out = Array1::zeros(x.nrows());
        for (k, m) in self.sub_models.iter().enumerate() {
            out += &(&m.predict_proba(x)? * &post.column(k));
        }
        Ok(out)
    }

    /// Posterior-weighted mixture of the sub-model scores (fitted values for
    /// regression models).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, UcslError> {
        let post = self.cluster_posterior(x)?;
        let mut out = Array1::zeros(x.nrows());
        for (k, m) in self.sub_models.iter().enumerate() {
            out += &(&m.decision_function(x)? * &post.column(k));
        }
        Ok(out)
    }

    /// Argmax cluster of every row (ties to the lowest index). With labels
    /// given, rows whose label is not `+1` get `None`.
    pub fn predict_cluster(&self, x: ArrayView2<f64>, y: Option<ArrayView1<f64>>) -> Result<Vec<Option<usize>>, UcslError> {
        let labels = self.cluster_posterior(x)?.hard_labels();
        if let Some(y) = y {
            if y.len() != x.nrows() {
                return Err(UcslError::DimensionMismatch { expected: x.nrows(), actual: y.len() });
            }
            return Ok(labels.into_iter().zip(y).map(|(l, &v)| (v > 0.0).then_some(l)).collect());
        }
        Ok(labels.into_iter().map(Some).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

/// Fits with ensemble members run in parallel when the `parallel` feature is
/// enabled.
pub fn fit(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig) -> Result<UcslModel, UcslError> {
    fit_with(x, y, config, Execution::default())
}

/// Binary classification fit: labels must be `±1` and the estimator a
/// classifier. Member `i` runs with seed `seed + i`.
pub fn fit_with(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig, exec: Execution) -> Result<UcslModel, UcslError> {
    if !config.estimator_kind.is_classifier() {
        return Err(UcslError::InvalidConfig("fit needs a classifier; use fit_regression for Regression".into()));
    }
    fit_task(x, y, config, exec)
}

/// Regression variant: every sample is clustered and the sub-models are
/// weighted linear regressors.
pub fn fit_regression(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig) -> Result<UcslModel, UcslError> {
    if config.estimator_kind != EstimatorKind::Regression {
        return Err(UcslError::InvalidConfig("fit_regression needs estimator_kind = Regression".into()));
    }
    fit_task(x, y, config, Execution::default())
}

fn fit_task(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &UcslConfig, exec: Execution) -> Result<UcslModel, UcslError> {
    config.validate()?;
    if y.len() != x.nrows() {
        return Err(UcslError::DimensionMismatch { expected: x.nrows(), actual: y.len() });
    }
    let task = Task::new(y, config)?;
    let k = config.n_clusters;

    let results = map_indexed(config.n_ensembles, exec, |i| run_em_once(x, y, config, config.seed.wrapping_add(i as u64)));
    let mut members = Vec::with_capacity(results.len());
    let mut runs = Vec::new();
    let mut first_error = None;
    for (i, r) in results.into_iter().enumerate() {
        let seed = config.seed.wrapping_add(i as u64);
        match r {
            Ok(run) => {
                members.push(MemberSummary { seed, n_iters: run.n_iters, converged: run.converged, error: None });
                runs.push(run.labels);
            }
            Err(e) => {
                let msg = e.to_string();
                members.push(MemberSummary { seed, n_iters: 0, converged: false, error: Some(msg.clone()) });
                first_error.get_or_insert(e);
            }
        }
    }
    let failed = members.len() - runs.len();
    if 2 * failed >= config.n_ensembles {
        let first = first_error.expect("at least one failure");
        // single runs surface their own error
        if config.n_ensembles == 1 {
            return Err(first);
        }
        return Err(UcslError::EnsembleFailed { failed, total: config.n_ensembles, first: first.to_string() });
    }

    let ensemble_labels = if runs.len() == 1 {
        crate::consensus::canonicalize(&runs[0])
    } else {
        let affinity = cooccurrence(&runs)?;
        spectral_clustering(affinity.values.view(), k, config.seed)?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(config.n_ensembles as u64));
    let q0 = consensus_responsibilities(x, y, &task, config, &ensemble_labels)?;
    let last = run_em_from(x, y, &task, config, q0, &mut rng)?;

    Ok(UcslModel {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        n_features: x.ncols(),
        sub_models: last.sub_models,
        basis: last.basis,
        cluster_model: last.cluster_model,
        consensus_labels: last.labels,
        ensemble_labels,
        n_em_iters_run: last.n_iters,
        converged: last.converged,
        members,
    })
}

/// Starting responsibilities for the final EM pass: one-hot consensus on the
/// clustered rows; for the other rows, the posterior of a clustering model
/// estimated from the consensus partition in the subspace of sub-models fit
/// to it.
fn consensus_responsibilities(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    task: &Task,
    config: &UcslConfig,
    consensus: &[usize],
) -> Result<ResponsibilityMatrix, UcslError> {
    let k = config.n_clusters;
    let mut q = ResponsibilityMatrix::uniform(x.nrows(), k);
    q.assign_rows(&task.clustered, &ResponsibilityMatrix::one_hot(consensus, k));
    if task.negatives.is_empty() {
        return Ok(q);
    }
    let uniform = UcslConfig { negative_weighting: NegativeWeighting::Uniform, ..config.clone() };
    let mut fit_q = q.clone();
    revive_collapsed(&mut fit_q, task);
    let models = m_step_task(x, y, &fit_q, task, &uniform, None)?;
    let basis = gram_schmidt(normals(&models)?.view(), DEFAULT_TOLERANCE)?;
    let projected = project(x, &basis)?;
    let clustered = projected.select(Axis(0), &task.clustered);
    let partition = fit_q.select_rows(&task.clustered).hard_labels();
    let model = match ClusteringModel::from_partition(config.clustering_method, clustered.view(), &partition, k) {
        Ok(m) => m,
        Err(_) => ClusteringModel::fit(config.clustering_method, clustered.view(), k, config.seed, config.clustering_n_init)?,
    };
    let negatives = projected.select(Axis(0), &task.negatives);
    q.assign_rows(&task.negatives, &model.posterior(negatives.view())?);
    Ok(q)
}

/// One binary model per class (class `+1`, the rest `-1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub schema_version: u32,
    pub classes: Vec<usize>,
    pub models: Vec<UcslModel>,
}

impl MulticlassModel {
    /// `n × C` matrix of per-class `p(y = class | x)`.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, UcslError> {
        let mut out = Array2::zeros((x.nrows(), self.classes.len()));
        for (c, m) in self.models.iter().enumerate() {
            out.column_mut(c).assign(&m.predict_proba(x)?);
        }
        Ok(out)
    }

    /// Class with the highest one-vs-rest probability (first on ties).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, UcslError> {
        let p = self.predict_proba(x)?;
        Ok(p.rows().into_iter().map(|r| self.classes[crate::clustering::argmax(r)]).collect())
    }
}

pub fn fit_multiclass(x: ArrayView2<f64>, classes: &[usize], config: &UcslConfig) -> Result<MulticlassModel, UcslError> {
    if classes.len() != x.nrows() {
        return Err(UcslError::DimensionMismatch { expected: x.nrows(), actual: classes.len() });
    }
    let mut distinct: Vec<usize> = classes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(UcslError::InvalidConfig("one-vs-rest needs at least two classes".into()));
    }
    for &c in &distinct {
        let count = classes.iter().filter(|&&v| v == c).count();
        if count < config.n_clusters {
            return Err(UcslError::InsufficientSamples { class: Some(c), needed: config.n_clusters, got: count });
        }
    }
    let models = distinct
        .iter()
        .map(|&c| {
            let y: Array1<f64> = classes.iter().map(|&v| if v == c { 1.0 } else { -1.0 }).collect();
            fit(x, y.view(), config)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MulticlassModel { schema_version: SCHEMA_VERSION, classes: distinct, models })
}
