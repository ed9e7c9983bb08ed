use crate::read_json;
use anyhow::{bail, Context, Result};
use clap::Args;
use ndarray::Array2;
use std::path::{Path, PathBuf};
use ucsl::{EstimatorKind, UcslModel, SCHEMA_VERSION};

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with a header row; label and subtype columns are skipped if present.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    label_column: String,
    #[arg(long, default_value = "subtype")]
    subtype_column: String,
    /// Output CSV with columns `p_y,cluster` (`y_hat,cluster` for regression
    /// models).
    #[arg(long)]
    out: PathBuf,
}

fn read_features(path: &Path, skip: &[&str]) -> Result<Array2<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let keep: Vec<usize> = (0..headers.len()).filter(|&j| !skip.contains(&headers[j].as_str())).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        for &j in &keep {
            let cell = record.get(j).unwrap_or("").trim();
            let v: f64 = cell.parse().with_context(|| format!("row {}, column `{}`: cannot parse `{cell}`", r + 1, headers[j]))?;
            if !v.is_finite() {
                bail!("row {}, column `{}`: non-finite value `{cell}`", r + 1, headers[j]);
            }
            values.push(v);
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, keep.len()), values)?)
}

pub fn run(args: &PredictArgs) -> Result<()> {
    let model: UcslModel = read_json(&args.model)?;
    if model.schema_version != SCHEMA_VERSION {
        bail!("model schema_version {} is not supported (expected {SCHEMA_VERSION})", model.schema_version);
    }
    let x = read_features(&args.data, &[&args.label_column, &args.subtype_column])?;
    let regression = model.config.estimator_kind == EstimatorKind::Regression;
    let (name, scores) = if regression { ("y_hat", model.predict(x.view())) } else { ("p_y", model.predict_proba(x.view())) };
    let scores = scores.with_context(|| format!("applying {} to {}", args.model.display(), args.data.display()))?;
    let clusters = model.predict_cluster(x.view(), None)?;

    let mut writer = csv::Writer::from_path(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    writer.write_record([name, "cluster"])?;
    for (s, c) in scores.iter().zip(clusters) {
        let c = c.expect("unmasked prediction always has a cluster");
        writer.write_record([s.to_string(), c.to_string()])?;
    }
    writer.flush().with_context(|| format!("writing {}", args.out.display()))?;
    log::info!("wrote {} predictions to {}", x.nrows(), args.out.display());
    Ok(())
}
