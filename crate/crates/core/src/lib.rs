//! Classification toolkit for sketch embeddings.
//!
//! The pipeline runs over [`data::EmbeddingSet`]s (feature vectors produced by
//! a pretrained network, one row per drawing):
//!
//! 1. [`data`] cleans rows by player guess rate, up-samples minority classes,
//!    and splits into stratified train/validation/test sets.
//! 2. [`cluster`] fits a fixed number of KMeans++ sub-cluster centroids per
//!    class and scores cluster quality with the silhouette coefficient.
//! 3. [`knnpp`] classifies queries by letting the nearest pooled centroids vote
//!    for their class with weight `1/sqrt(distance)`.
//! 4. [`eval`] computes Top-N accuracy, confusion matrices and loss-curve
//!    smoothing.
//! 5. [`project`] produces 2-D PCA and exact t-SNE layouts for inspection.
//!
//! [`tinynn`] is an independent from-scratch four-block CNN baseline with a
//! finite-difference gradient checker.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too; index
// loops mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cluster;
pub mod data;
pub mod error;
pub mod eval;
pub mod knnpp;
pub mod matrix;
pub mod project;
pub mod report;
pub mod rng;
pub mod synthetic;
pub mod tinynn;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Version of the on-disk embedding-set, centroid-model and checkpoint formats.
pub const FORMAT_VERSION: u32 = 1;
