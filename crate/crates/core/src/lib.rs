//! Inverse feature learning on top of a from-scratch dense-network substrate.
//!
//! The pipeline clusters held-out folds of a data set with two-phase deep
//! embedded clustering (autoencoder pretraining, then KL-divergence refinement
//! of a Student's-t soft assignment) and converts each instance's relationship
//! to the learned clusters into a compact set of error-representation
//! features: a confidence ratio, a vector of latent distances to every
//! centroid, and (when labels are available) the accuracy of the nearest
//! cluster. The learned features can be used on their own or next to the
//! primary features for downstream clustering and classification.
//!
//! Module map:
//!
//! * [`matrix`] / [`scalar`] — dense row-major matrices over `f32`/`f64`.
//! * [`nn`] — feed-forward networks, exact backpropagation, Adam, autoencoder
//!   training.
//! * [`cluster`] — k-means, agglomerative clustering, Hungarian assignment,
//!   unsupervised clustering accuracy.
//! * [`dec`] — soft assignment, target distribution, KL loss and gradients,
//!   the joint refinement loop.
//! * [`features`] — inner folding, the error-representation features, cluster
//!   tracking across runs, feature packaging for classifiers.
//! * [`eval`] — KNN / MLP classifiers and repeatable experiment drivers.
//! * [`io`] — CSV / IDX loaders, feature and report export, 2-D projections.

// Index loops mirror the row/column math throughout; iterator rewrites of
// multi-array indexing read worse here.
#![allow(clippy::needless_range_loop)]

pub mod cluster;
pub mod dataset;
pub mod dec;
mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod matrix;
pub mod nn;
pub mod scalar;
pub mod synth;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;

/// Single-precision matrix.
pub type Mat32 = Matrix<f32>;
/// Double-precision matrix; the default for every numeric surface.
pub type Mat64 = Matrix<f64>;
/// Double-precision data set.
pub type Dataset64 = Dataset<f64>;

/// Derives an independent stream seed from a master seed.
///
/// Every pipeline stage that needs randomness gets its own stream so that,
/// e.g., changing the feature-learning configuration cannot shift the seeds
/// used by an unrelated method run. splitmix64 finalizer.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
