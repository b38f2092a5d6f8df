//! Nearest-neighbor style classifiers and the experiment harness around them.
//!
//! * [`neighbors`]: Euclidean and Mahalanobis distances, exhaustive KNN.
//! * [`enn`]: extended nearest neighbor, with both the direct and the
//!   incremental decision rule.
//! * [`svm`]: soft-margin kernel SVM trained by SMO, one-vs-one multiclass.
//! * [`lmnn`]: large margin nearest neighbor metric learning.
//! * [`dataset`]: CSV ingestion, imputation, z-scoring, stratified splits.
//! * [`bench`]: manifest-driven benchmark runs and report files.

pub mod bench;
pub mod dataset;
pub mod enn;
pub mod error;
pub mod linalg;
pub mod lmnn;
pub mod neighbors;
pub mod svm;

pub use dataset::{CsvSchema, Dataset, MissingPolicy, SplitSpec};
pub use enn::{ClasswiseStats, EnnModel};
pub use error::{Error, Result};
pub use lmnn::{LmnnConfig, MetricModel};
pub use neighbors::{DistanceMetric, KnnModel, NeighborList, Prediction};
pub use svm::{KernelSpec, MulticlassSvm, SvmConfig, SvmDual};
