mod benchmark;
mod fit;
mod generate;
mod predict;
mod svg;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use ucsl::{ClusteringMethod, EstimatorKind, NegativeWeighting, UcslConfig};

#[derive(Parser)]
#[command(name = "ucsl", version, about = "Subtype discovery by clustering inside classifier subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic toy dataset as CSV.
    Generate(generate::GenerateArgs),
    /// Fit a model on a CSV dataset and write model and metrics JSON.
    Fit(fit::FitArgs),
    /// Apply a fitted model to a CSV dataset.
    Predict(predict::PredictArgs),
    /// Run a noise-robustness sweep against k-means and GMM baselines.
    Benchmark(benchmark::BenchmarkArgs),
}

/// Algorithm flags shared by `fit` and `benchmark`; each one overrides the
/// config file.
#[derive(Args, Debug, Clone)]
pub struct AlgorithmArgs {
    /// Number of clusters K.
    #[arg(long)]
    k: Option<usize>,
    /// gmm or kmeans.
    #[arg(long)]
    clustering: Option<ClusteringMethod>,
    /// logistic, hinge or regression.
    #[arg(long)]
    classifier: Option<EstimatorKind>,
    /// Number of ensemble members.
    #[arg(long)]
    ensembles: Option<usize>,
    /// posterior-extension or uniform.
    #[arg(long)]
    negative_weighting: Option<NegativeWeighting>,
    /// ARI between successive labelings that ends the EM loop.
    #[arg(long)]
    stop_ari: Option<f64>,
    /// Maximum EM iterations per run.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
}

impl AlgorithmArgs {
    pub fn apply(&self, config: &mut UcslConfig) {
        if let Some(k) = self.k {
            config.n_clusters = k;
        }
        if let Some(m) = self.clustering {
            config.clustering_method = m;
        }
        if let Some(c) = self.classifier {
            config.estimator_kind = c;
        }
        if let Some(e) = self.ensembles {
            config.n_ensembles = e;
        }
        if let Some(w) = self.negative_weighting {
            config.negative_weighting = w;
        }
        if let Some(s) = self.stop_ari {
            config.stop_ari = s;
        }
        if let Some(m) = self.max_iter {
            config.max_em_iter = m;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("UCSL_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().with_context(|| format!("UCSL_THREADS must be a positive integer, got `{value}`"))?;
    anyhow::ensure!(threads > 0, "UCSL_THREADS must be a positive integer, got `{value}`");
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Generate(args) => generate::run(&args),
        Command::Fit(args) => fit::run(&args),
        Command::Predict(args) => predict::run(&args),
        Command::Benchmark(args) => benchmark::run(&args),
    }
}
