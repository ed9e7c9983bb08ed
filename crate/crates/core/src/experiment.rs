//! Noise-robustness sweeps: UCSL without ensembling against plain k-means
//! and GMM on the raw positives, scored by ARI against the subtype truth.

use crate::clustering::{fit_gmm, fit_kmeans, ClusteringModel};
use crate::data::{generate_toy, Dataset, ToyConfig, ToyGeometry};
use crate::metrics::adjusted_rand_index;
use crate::par::{map_indexed, Execution};
use crate::ucsl::{run_em_once, NegativeWeighting, UcslConfig};
use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ucsl,
    UcslUniform,
    Kmeans,
    Gmm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ucsl, Method::UcslUniform, Method::Kmeans, Method::Gmm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ucsl => "ucsl",
            Method::UcslUniform => "ucsl-uniform",
            Method::Kmeans => "kmeans",
            Method::Gmm => "gmm",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method `{s}` (expected ucsl, ucsl-uniform, kmeans or gmm)"))
    }
}

/// Hard labels of the positives of `data` produced by `method`, with all
/// randomness drawn from `seed`. UCSL runs a single EM pass (no ensembling);
/// the baselines cluster the raw positives with one initialization.
pub fn cluster_positives(method: Method, data: &Dataset, k: usize, base: &UcslConfig, seed: u64) -> Result<Vec<usize>, String> {
    let positives = data.positive_indices();
    match method {
        Method::Ucsl | Method::UcslUniform => {
            let weighting = if method == Method::Ucsl { base.negative_weighting } else { NegativeWeighting::Uniform };
            let config = UcslConfig { n_clusters: k, n_ensembles: 1, negative_weighting: weighting, seed, ..base.clone() };
            run_em_once(data.features.view(), data.labels.view(), &config, seed).map(|r| r.labels).map_err(|e| e.to_string())
        }
        Method::Kmeans | Method::Gmm => {
            let x = data.features.select(Axis(0), &positives);
            let model = if method == Method::Kmeans {
                ClusteringModel::Kmeans(fit_kmeans(x.view(), k, seed, 1).map_err(|e| e.to_string())?)
            } else {
                ClusteringModel::Gmm(fit_gmm(x.view(), k, seed, 1).map_err(|e| e.to_string())?)
            };
            Ok(model.posterior(x.view()).map_err(|e| e.to_string())?.hard_labels())
        }
    }
}

/// ARI of [`cluster_positives`] against the positives' subtype truth.
pub fn score(method: Method, data: &Dataset, k: usize, base: &UcslConfig, seed: u64) -> Result<f64, String> {
    let truth = data.positive_subtypes().ok_or("dataset has no subtype truth")?;
    let labels = cluster_positives(method, data, k, base, seed)?;
    adjusted_rand_index(&truth, &labels).map_err(|e| e.to_string())
}

/// Appends `noise_dims` i.i.d. standard-normal columns.
pub fn with_noise_features(data: &Dataset, noise_dims: usize, seed: u64) -> Dataset {
    if noise_dims == 0 {
        return data.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn((data.n_samples(), noise_dims), || rng.sample::<f64, _>(StandardNormal));
    let features = concatenate(Axis(1), &[data.features.view(), noise.view()]).expect("row counts match");
    let feature_names = data.feature_names.as_ref().map(|names| {
        let mut names = names.clone();
        names.extend((1..=noise_dims).map(|j| format!("noise{j}")));
        names
    });
    Dataset { features, feature_names, ..data.clone() }
}

/// Where the data of a sweep comes from.
#[derive(Clone, Debug)]
pub enum SweepData {
    /// Fresh toy data per (geometry, noise_dims, seed); `noise_dims` is passed
    /// to the generator.
    Toy { geometries: Vec<ToyGeometry>, n_per_cluster: usize, cluster_separation: f64 },
    /// One fixed dataset; noise columns are appended per (noise_dims, seed).
    Fixed { name: String, data: Dataset, n_clusters: usize },
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub data: SweepData,
    pub noise_dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Base UCSL settings; `n_clusters` is taken from the geometry for toy
    /// data.
    pub ucsl: UcslConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: String,
    pub noise_dims: usize,
    pub method: Method,
    pub seed: u64,
    pub ari: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub config: String,
    pub noise_dims: usize,
    pub method: Method,
    pub mean_ari: f64,
    /// Population standard deviation over the successful runs.
    pub std_ari: f64,
    pub runs: Vec<f64>,
    pub failures: usize,
}

/// Runs every (data, noise_dims, seed) cell, concurrently when `exec` allows.
/// Records come back ordered by (config, noise_dims, method, seed).
pub fn run_sweep(sweep: &Sweep, exec: Execution) -> Vec<RunRecord> {
    let configs: Vec<(String, Option<ToyGeometry>)> = match &sweep.data {
        SweepData::Toy { geometries, .. } => geometries.iter().map(|g| (g.short_name().to_string(), Some(*g))).collect(),
        SweepData::Fixed { name, .. } => vec![(name.clone(), None)],
    };
    let mut cells = Vec::new();
    for (ci, _) in configs.iter().enumerate() {
        for &noise in &sweep.noise_dims {
            for &seed in &sweep.seeds {
                cells.push((ci, noise, seed));
            }
        }
    }
    let results = map_indexed(cells.len(), exec, |i| {
        let (ci, noise, seed) = cells[i];
        let (name, geometry) = &configs[ci];
        let prepared = match (&sweep.data, geometry) {
            (SweepData::Toy { n_per_cluster, cluster_separation, .. }, Some(g)) => {
                let cfg = ToyConfig {
                    config_id: *g,
                    n_per_cluster: *n_per_cluster,
                    noise_dims: noise,
                    cluster_separation: *cluster_separation,
                    seed,
                };
                generate_toy(&cfg).map(|d| (d, g.n_clusters())).map_err(|e| e.to_string())
            }
            (SweepData::Fixed { data, n_clusters, .. }, _) => Ok((with_noise_features(data, noise, seed), *n_clusters)),
            _ => unreachable!("toy configs always carry a geometry"),
        };
        sweep
            .methods
            .iter()
            .map(|&method| {
                let outcome = prepared.as_ref().map_err(Clone::clone).and_then(|(d, k)| score(method, d, *k, &sweep.ucsl, seed));
                RunRecord {
                    config: name.clone(),
                    noise_dims: noise,
                    method,
                    seed,
                    ari: outcome.as_ref().ok().copied(),
                    error: outcome.err(),
                }
            })
            .collect::<Vec<_>>()
    });
    let mut records: Vec<RunRecord> = results.into_iter().flatten().collect();
    let config_rank = |name: &str| configs.iter().position(|(n, _)| n == name).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        config_rank(&a.config)
            .cmp(&config_rank(&b.config))
            .then(a.noise_dims.cmp(&b.noise_dims))
            .then(a.method.cmp(&b.method))
    });
    records
}

/// Mean and population standard deviation per (config, noise_dims, method),
/// keeping the record order.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for r in records {
        let cell = match out.iter_mut().find(|c| c.config == r.config && c.noise_dims == r.noise_dims && c.method == r.method) {
            Some(c) => c,
            None => {
                out.push(CellSummary {
                    config: r.config.clone(),
                    noise_dims: r.noise_dims,
                    method: r.method,
                    mean_ari: f64::NAN,
                    std_ari: f64::NAN,
                    runs: Vec::new(),
                    failures: 0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        match r.ari {
            Some(a) => cell.runs.push(a),
            None => cell.failures += 1,
        }
    }
    for c in &mut out {
        if !c.runs.is_empty() {
            let n = c.runs.len() as f64;
            c.mean_ari = c.runs.iter().sum::<f64>() / n;
            c.std_ari = (c.runs.iter().map(|a| (a - c.mean_ari).powi(2)).sum::<f64>() / n).sqrt();
        }
    }
    out
}
