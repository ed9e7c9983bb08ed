use crate::{read_json, write_json, AlgorithmArgs};
use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use std::path::{Path, PathBuf};
use ucsl::data::load_csv;
use ucsl::metrics::{adjusted_rand_index, cluster_balanced_accuracy, homogeneity_completeness_v_measure};
use ucsl::ucsl::{fit, fit_regression, MemberSummary};
use ucsl::{Dataset, EstimatorKind, UcslConfig, UcslModel, SCHEMA_VERSION};

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    label_column: String,
    /// Subtype ground truth used for the metrics; a column named `subtype`
    /// is picked up automatically.
    #[arg(long)]
    subtype_column: Option<String>,
    /// UcslConfig JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    algorithm: AlgorithmArgs,
    /// Model JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Metrics JSON output (default: next to the model, `<stem>.metrics.json`).
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Serialize)]
struct FitMetrics<'a> {
    schema_version: u32,
    n_samples: usize,
    n_features: usize,
    n_clusters: usize,
    /// Sizes of the consensus clusters over the clustered training rows.
    cluster_sizes: Vec<usize>,
    ari: Option<f64>,
    v_measure: Option<f64>,
    homogeneity: Option<f64>,
    completeness: Option<f64>,
    cluster_b_acc: Option<f64>,
    final_em_iterations: usize,
    converged: bool,
    members: &'a [MemberSummary],
}

fn has_column(path: &Path, name: &str) -> Result<bool> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(reader.headers()?.iter().any(|h| h == name))
}

fn default_metrics_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    out.with_file_name(format!("{stem}.metrics.json"))
}

/// Subtype truth aligned with `consensus_labels`, when every clustered row
/// has one.
fn clustered_truth(data: &Dataset, regression: bool) -> Option<Vec<usize>> {
    if regression {
        data.subtype_truth.as_ref()?.iter().copied().collect()
    } else {
        data.positive_subtypes()
    }
}

fn metrics<'a>(data: &Dataset, model: &'a UcslModel, regression: bool) -> Result<FitMetrics<'a>> {
    let k = model.config.n_clusters;
    let mut cluster_sizes = vec![0; k];
    for &l in &model.consensus_labels {
        cluster_sizes[l] += 1;
    }
    let mut out = FitMetrics {
        schema_version: SCHEMA_VERSION,
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        n_clusters: k,
        cluster_sizes,
        ari: None,
        v_measure: None,
        homogeneity: None,
        completeness: None,
        cluster_b_acc: None,
        final_em_iterations: model.n_em_iters_run,
        converged: model.converged,
        members: &model.members,
    };
    match clustered_truth(data, regression) {
        Some(truth) if truth.len() >= 2 => {
            let labels = &model.consensus_labels;
            let v = homogeneity_completeness_v_measure(&truth, labels)?;
            out.ari = Some(adjusted_rand_index(&truth, labels)?);
            out.v_measure = Some(v.v_measure);
            out.homogeneity = Some(v.homogeneity);
            out.completeness = Some(v.completeness);
            out.cluster_b_acc = Some(cluster_balanced_accuracy(&truth, labels)?);
        }
        Some(_) => log::warn!("too few clustered rows to score against the subtype column"),
        None if data.subtype_truth.is_some() => log::warn!("some clustered rows lack a subtype; skipping ARI and friends"),
        None => {}
    }
    Ok(out)
}

pub fn run(args: &FitArgs) -> Result<()> {
    let mut config: UcslConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => UcslConfig::default(),
    };
    args.algorithm.apply(&mut config);

    let subtype = match &args.subtype_column {
        Some(name) => Some(name.clone()),
        None => has_column(&args.data, "subtype")?.then(|| "subtype".to_string()),
    };
    let data = load_csv(&args.data, &args.label_column, subtype.as_deref()).with_context(|| format!("loading {}", args.data.display()))?;
    log::info!("loaded {} samples x {} features from {}", data.n_samples(), data.n_features(), args.data.display());

    let regression = config.estimator_kind == EstimatorKind::Regression;
    let model = if regression {
        fit_regression(data.features.view(), data.labels.view(), &config)
    } else {
        fit(data.features.view(), data.labels.view(), &config)
    }
    .context("fitting the model")?;
    for m in &model.members {
        if let Some(e) = &m.error {
            log::warn!("ensemble member with seed {} failed: {e}", m.seed);
        }
    }

    let report = metrics(&data, &model, regression)?;
    std::fs::write(&args.out, model.to_json() + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    let metrics_path = args.metrics.clone().unwrap_or_else(|| default_metrics_path(&args.out));
    write_json(&metrics_path, &report)?;
    match report.ari {
        Some(ari) => log::info!("consensus ARI {ari:.3}; model in {}, metrics in {}", args.out.display(), metrics_path.display()),
        None => log::info!("model in {}, metrics in {}", args.out.display(), metrics_path.display()),
    }
    Ok(())
}
