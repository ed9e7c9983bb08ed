use crate::{read_json, svg, write_json};
use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use ucsl::data::{load_csv, load_idx, IdxOptions, ToyGeometry};
use ucsl::experiment::{run_sweep, summarize, CellSummary, Method, RunRecord, Sweep, SweepData};
use ucsl::{Dataset, Execution, UcslConfig, SCHEMA_VERSION};

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// ExperimentConfig JSON; without it the four toy geometries are swept
    /// over noise_dims 0, 5, 10, 20, 50 with seeds 0..10.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` of the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for symmetry with `fit`; sweeps always run without ensembling.
    #[arg(long)]
    ensembles: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Source {
    Generate {
        #[serde(default = "all_geometries")]
        geometries: Vec<String>,
        #[serde(default = "default_n")]
        n_per_cluster: usize,
        #[serde(default = "default_separation")]
        cluster_separation: f64,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "default_label")]
        label_column: String,
        #[serde(default = "default_subtype")]
        subtype_column: String,
        n_clusters: usize,
        name: Option<String>,
    },
    /// Digits listed in `positive_digits` form the positive class, each digit
    /// one subtype; every other digit is negative.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        positive_digits: Vec<usize>,
        downsample: Option<usize>,
        take_first: Option<usize>,
        name: Option<String>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Source,
    #[serde(default)]
    pub ucsl: UcslConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub noise_dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
}

fn all_geometries() -> Vec<String> {
    ToyGeometry::ALL.iter().map(|g| g.short_name().to_string()).collect()
}

fn default_n() -> usize {
    250
}

fn default_separation() -> f64 {
    5.0
}

fn default_label() -> String {
    "y".into()
}

fn default_subtype() -> String {
    "subtype".into()
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ucsl, Method::Kmeans, Method::Gmm]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: Source::Generate {
                geometries: all_geometries(),
                n_per_cluster: default_n(),
                cluster_separation: default_separation(),
            },
            ucsl: UcslConfig::default(),
            methods: default_methods(),
            noise_dims: vec![0, 5, 10, 20, 50],
            seeds: (0..10).collect(),
            out_dir: None,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    cells: &'a [CellSummary],
}

fn sweep_data(source: &Source) -> Result<SweepData> {
    Ok(match source {
        Source::Generate { geometries, n_per_cluster, cluster_separation } => {
            ensure!(!geometries.is_empty(), "source.geometries must not be empty");
            let geometries = geometries.iter().map(|g| g.parse::<ToyGeometry>().map_err(anyhow::Error::msg)).collect::<Result<_>>()?;
            SweepData::Toy { geometries, n_per_cluster: *n_per_cluster, cluster_separation: *cluster_separation }
        }
        Source::Csv { path, label_column, subtype_column, n_clusters, name } => {
            let data = load_csv(path, label_column, Some(subtype_column)).with_context(|| format!("loading {}", path.display()))?;
            let name = name.clone().unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            SweepData::Fixed { name, data, n_clusters: *n_clusters }
        }
        Source::Idx { images, labels, positive_digits, downsample, take_first, name } => {
            ensure!(!positive_digits.is_empty(), "source.positive_digits must not be empty");
            let digits = load_idx(images, labels, IdxOptions { downsample: *downsample, take_first: *take_first })
                .with_context(|| format!("loading {}", images.display()))?;
            let data = digits_as_subtypes(&digits, positive_digits)?;
            let name = name.clone().unwrap_or_else(|| {
                let ds: Vec<String> = positive_digits.iter().map(|d| d.to_string()).collect();
                format!("digits-{}", ds.join("-"))
            });
            SweepData::Fixed { name, data, n_clusters: positive_digits.len() }
        }
    })
}

fn digits_as_subtypes(digits: &Dataset, positive: &[usize]) -> Result<Dataset> {
    let truth = digits.subtype_truth.as_ref().context("IDX data without digit labels")?;
    let subtype: Vec<Option<usize>> = truth.iter().map(|t| t.and_then(|d| positive.iter().position(|&p| p == d))).collect();
    let labels = subtype.iter().map(|s| if s.is_some() { 1.0 } else { -1.0 }).collect();
    Ok(Dataset::new(digits.features.clone(), labels, Some(subtype), digits.feature_names.clone())?)
}

fn write_runs(path: &PathBuf, records: &[RunRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["config", "noise_dims", "method", "seed", "ari", "error"])?;
    for r in records {
        writer.write_record([
            r.config.clone(),
            r.noise_dims.to_string(),
            r.method.name().to_string(),
            r.seed.to_string(),
            r.ari.map(|a| a.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let config: ExperimentConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = args.ensembles {
        log::warn!("--ensembles {e} ignored: benchmark sweeps run a single EM pass without ensembling");
    }
    ensure!(!config.noise_dims.is_empty(), "noise_dims must not be empty");
    ensure!(!config.seeds.is_empty(), "seeds must not be empty");
    ensure!(!config.methods.is_empty(), "methods must not be empty");
    let Some(out_dir) = args.out.clone().or(config.out_dir.clone()) else {
        bail!("no output directory: pass --out or set out_dir in the config");
    };
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let sweep = Sweep {
        data: sweep_data(&config.source)?,
        noise_dims: config.noise_dims.clone(),
        seeds: config.seeds.clone(),
        methods: config.methods.clone(),
        ucsl: UcslConfig { n_ensembles: 1, ..config.ucsl.clone() },
    };
    let cells = config.noise_dims.len() * config.seeds.len();
    log::info!("running {cells} sweep cells x {} methods", config.methods.len());
    let records = run_sweep(&sweep, Execution::default());
    for r in records.iter().filter(|r| r.error.is_some()) {
        log::warn!("{} noise {} {} seed {} failed: {}", r.config, r.noise_dims, r.method.name(), r.seed, r.error.as_deref().unwrap_or(""));
    }
    let summary = summarize(&records);

    write_runs(&out_dir.join("runs.csv"), &records)?;
    write_json(&out_dir.join("summary.json"), &Summary { schema_version: SCHEMA_VERSION, cells: &summary })?;
    let chart = out_dir.join("ari_vs_noise.svg");
    std::fs::write(&chart, svg::ari_chart(&summary)).with_context(|| format!("writing {}", chart.display()))?;
    for c in &summary {
        log::info!("{:<18} noise {:>3} {:<12} ARI {:.3} ± {:.3}", c.config, c.noise_dims, c.method.name(), c.mean_ari, c.std_ari);
    }
    log::info!("results in {}", out_dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"source": {"kind": "generate"}, "noise_dims": [0], "seeds": [1, 2]}"#).unwrap();
        assert_eq!(c.methods, default_methods());
        assert!(matches!(c.source, Source::Generate { ref geometries, n_per_cluster: 250, .. } if geometries.len() == 4));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"source": {"kind": "generate"}, "noise_dims": [0], "seeds": [1], "extra": 1}"#).is_err());
    }

    #[test]
    fn digits_become_subtypes() {
        let x = ndarray::Array2::zeros((4, 1));
        let d = Dataset::new(x, ndarray::arr1(&[3.0, 5.0, 8.0, 5.0]), Some(vec![Some(3), Some(5), Some(8), Some(5)]), None).unwrap();
        let out = digits_as_subtypes(&d, &[5, 8]).unwrap();
        assert_eq!(out.labels.to_vec(), vec![-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(out.positive_subtypes().unwrap(), vec![0, 1, 0]);
    }
}
