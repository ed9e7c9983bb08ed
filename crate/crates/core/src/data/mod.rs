//! Datasets: an `n × d` feature matrix with labels and optional subtype
//! ground truth, plus loaders (CSV, IDX) and the synthetic toy geometries.

mod csv_io;
mod idx;
mod toy;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use std::path::PathBuf;

pub use csv_io::{load_csv, write_csv, CsvColumns};
pub use idx::{load_idx, IdxOptions};
pub use toy::{generate_toy, ToyConfig, ToyGeometry};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("cannot parse `{value}` at row {row}, column `{column}`")]
    Parse { row: usize, column: String, value: String },
    #[error("non-finite value `{value}` at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String, value: String },
    #[error("bad IDX magic number {found:#010x} in {path} (expected {expected:#010x})")]
    IdxMagic { path: PathBuf, found: u32, expected: u32 },
    #[error("IDX header of {path} describes {expected} bytes of payload, file has {actual}")]
    IdxLength { path: PathBuf, expected: usize, actual: usize },
    #[error("image and label files disagree: {images} images vs {labels} labels")]
    IdxCount { images: usize, labels: usize },
    #[error("cannot downsample {from}x{from} images to {to}x{to}")]
    Downsample { from: usize, to: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// A labelled feature matrix.
///
/// `labels` holds `±1` for classification and arbitrary reals for
/// regression. `subtype_truth` is only used for evaluation; `None` entries
/// mark samples without a subtype (negatives).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub subtype_truth: Option<Vec<Option<usize>>>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Array1<f64>,
        subtype_truth: Option<Vec<Option<usize>>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(DataError::Invalid(format!("{} labels for {} rows", labels.len(), n)));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite feature at row {}, column {}",
                pos / features.ncols().max(1),
                pos % features.ncols().max(1)
            )));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite label".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != features.ncols() {
                return Err(DataError::Invalid(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    features.ncols()
                )));
            }
        }
        if let Some(truth) = &subtype_truth {
            if truth.len() != n {
                return Err(DataError::Invalid(format!("{} subtype entries for {} rows", truth.len(), n)));
            }
            if is_binary(labels.view()) {
                if let Some(i) = (0..n).find(|&i| labels[i] > 0.0 && truth[i].is_none()) {
                    return Err(DataError::Invalid(format!("positive sample {i} has no subtype")));
                }
            }
        }
        Ok(Self { features, labels, subtype_truth, feature_names })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_binary(&self) -> bool {
        is_binary(self.labels.view())
    }

    /// Row indices with label `+1`.
    pub fn positive_indices(&self) -> Vec<usize> {
        positive_indices(self.labels.view())
    }

    /// Subtype labels of the positive samples, in row order.
    pub fn positive_subtypes(&self) -> Option<Vec<usize>> {
        let truth = self.subtype_truth.as_ref()?;
        self.positive_indices().into_iter().map(|i| truth[i]).collect()
    }

    /// Keeps the first `n` rows.
    pub fn take_first(&self, n: usize) -> Dataset {
        let n = n.min(self.n_samples());
        Dataset {
            features: self.features.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels.slice(ndarray::s![..n]).to_owned(),
            subtype_truth: self.subtype_truth.as_ref().map(|t| t[..n].to_vec()),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Relabels a multiclass dataset (class id in `subtype_truth`, as the IDX
    /// loader produces) into `class` vs rest: `+1` for the class, `-1` otherwise.
    pub fn one_vs_rest(&self, class: usize) -> Result<Dataset, DataError> {
        let truth = self
            .subtype_truth
            .as_ref()
            .ok_or_else(|| DataError::Invalid("one-vs-rest needs class ids in subtype_truth".into()))?;
        let labels = truth.iter().map(|t| if *t == Some(class) { 1.0 } else { -1.0 }).collect();
        Ok(Dataset { labels, ..self.clone() })
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            subtype_truth: self.subtype_truth.as_ref().map(|t| rows.iter().map(|&i| t[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// True when every label is exactly `-1` or `+1`.
pub fn is_binary(labels: ArrayView1<f64>) -> bool {
    labels.iter().all(|&v| v == 1.0 || v == -1.0)
}

pub fn positive_indices(labels: ArrayView1<f64>) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
}
