//! UCSL: unsupervised clustering driven by supervised learning.
//!
//! Subtypes of a labelled class are discovered with an EM loop that
//! alternates two steps:
//!
//! * **M-step**: one weighted linear model per latent cluster, each fit on
//!   all samples with the cluster responsibilities as sample weights.
//! * **E-step**: the hyperplane normals are orthonormalized with
//!   Gram-Schmidt, the data is projected onto that discriminative subspace and
//!   a clustering model (GMM or k-means) fit on the projected positives gives
//!   the new responsibilities.
//!
//! Several independent EM runs are merged through a co-occurrence matrix and
//! spectral clustering, then a last EM pass refines the consensus.
//!
//! ```no_run
//! use ucsl::data::{generate_toy, ToyConfig, ToyGeometry};
//! use ucsl::ucsl::{fit, UcslConfig};
//!
//! let data = generate_toy(&ToyConfig::new(ToyGeometry::AlongBoundary2, 7)).unwrap();
//! let config = UcslConfig { n_clusters: 2, ..UcslConfig::default() };
//! let model = fit(data.features.view(), data.labels.view(), &config).unwrap();
//! println!("{:?}", &model.consensus_labels[..10]);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod consensus;
pub mod data;
pub mod estimators;
pub mod experiment;
pub mod metrics;
pub mod par;
pub mod projection;
pub mod ucsl;

mod linalg;
mod serde_arrays;

/// Version tag written into every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;

pub use clustering::{ClusteringMethod, ClusteringModel, GmmModel, KmeansModel, ResponsibilityMatrix};
pub use data::Dataset;
pub use estimators::{EstimatorKind, LinearModel};
pub use par::Execution;
pub use projection::DirectionBasis;
pub use ucsl::{NegativeWeighting, UcslConfig, UcslError, UcslModel};
