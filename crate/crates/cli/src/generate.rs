use anyhow::{Context, Result};
use clap::Args;
use std::path::PathBuf;
use ucsl::data::{generate_toy, write_csv, CsvColumns, ToyConfig, ToyGeometry};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// along3, along2, parallel-outside4 or parallel-inside2.
    #[arg(long)]
    config: ToyGeometry,
    /// Samples per blob.
    #[arg(long, default_value_t = 250)]
    n: usize,
    /// Extra standard-normal feature columns.
    #[arg(long, default_value_t = 0)]
    noise_dims: usize,
    /// Distance scale between blob centers.
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    let config = ToyConfig {
        config_id: args.config,
        n_per_cluster: args.n,
        noise_dims: args.noise_dims,
        cluster_separation: args.separation,
        seed: args.seed,
    };
    let data = generate_toy(&config)?;
    write_csv(&data, &args.out, &CsvColumns::default()).with_context(|| format!("writing {}", args.out.display()))?;
    log::info!("wrote {} samples x {} features to {}", data.n_samples(), data.n_features(), args.out.display());
    Ok(())
}
