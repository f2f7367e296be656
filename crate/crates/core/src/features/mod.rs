//! Error-representation feature learning.
//!
//! Data is partitioned into `r` inner folds. For each run, a deep embedded
//! clustering model is trained on the `r - 1` inner-train folds, and the
//! held-out fold's relationship to the learned clusters becomes its features:
//!
//! * **confidence** — size of the nearest cluster over the inner-train count,
//! * **weight** — Euclidean distances from the latent point to every
//!   centroid,
//! * **accuracy of assignment** — the nearest cluster's per-cluster accuracy
//!   (labeled runs only).
//!
//! Cluster indices are tracked across runs so weight columns keep a stable
//! meaning, and the per-instance rows are packaged for clustering or for the
//! two classification layouts.

mod folding;
mod packaging;
mod pipeline;
mod tracking;

pub use folding::FoldAssignment;
pub use packaging::{
    aggregate_versions, aggregate_versions_hard, package_technique1, package_technique2,
};
pub use pipeline::{
    ifl_classification_test_features, ifl_classification_train_features, ifl_cluster_features,
    RunReference, TrainFeatures,
};
pub use tracking::{track_clusters, trackability_threshold, Alignment, TrackedRun};

use crate::dec::{ClusterModel, DecConfig};
use crate::error::{Error, Result};
use crate::matrix::{euclidean_distance, Matrix};
use crate::nn::TrainOptions;
use crate::scalar::Scalar;

/// Knobs shared by every feature-learning pipeline.
#[derive(Debug, Clone)]
pub struct IflConfig<T> {
    /// Encoder interior (`hidden..., latent`); the input width is taken from
    /// the data and the decoder mirrors the encoder.
    pub encoder_dims: Vec<usize>,
    pub train: TrainOptions<T>,
    pub dec: DecConfig<T>,
}

impl<T: Scalar> Default for IflConfig<T> {
    fn default() -> Self {
        IflConfig {
            encoder_dims: vec![500, 500, 2000, 10],
            train: TrainOptions::default(),
            dec: DecConfig::default(),
        }
    }
}

/// What a feature table's columns mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// `confidence, weight_0..weight_{s-1}` — width `1 + s`.
    Clustering,
    /// `confidence, weight_0..weight_{s-1}, accuracy` — width `s + 2`; the
    /// raw labeled rows before packaging.
    ClassificationRaw,
    /// `confidence, weight, accuracy` — width 3, one row per (instance,
    /// cluster version).
    Technique1,
    /// `confidence, accuracy, weight_0..weight_{s-1}` — width `2 + s`.
    Technique2,
}

/// Learned error-representation features with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct IflFeatureTable<T> {
    pub kind: TableKind,
    pub features: Matrix<T>,
    /// Source instance id per row.
    pub instance_ids: Vec<usize>,
    /// Cluster version per row (technique 1 only).
    pub version_ids: Option<Vec<usize>>,
    /// Labels per row; replicated across versions in technique 1.
    pub labels: Option<Vec<usize>>,
    pub s: usize,
    /// Non-fatal observations from the pipeline (trackability, missing
    /// classes in a fold).
    pub warnings: Vec<String>,
}

impl<T: Scalar> IflFeatureTable<T> {
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn expected_width(kind: TableKind, s: usize) -> usize {
        match kind {
            TableKind::Clustering => 1 + s,
            TableKind::ClassificationRaw => s + 2,
            TableKind::Technique1 => 3,
            TableKind::Technique2 => 2 + s,
        }
    }

    /// Column names in declared order.
    pub fn column_names(&self) -> Vec<String> {
        match self.kind {
            TableKind::Clustering => {
                let mut names = vec!["confidence".to_string()];
                names.extend((0..self.s).map(|j| format!("weight_{j}")));
                names
            }
            TableKind::ClassificationRaw => {
                let mut names = vec!["confidence".to_string()];
                names.extend((0..self.s).map(|j| format!("weight_{j}")));
                names.push("accuracy".to_string());
                names
            }
            TableKind::Technique1 => vec![
                "confidence".to_string(),
                "weight".to_string(),
                "accuracy".to_string(),
            ],
            TableKind::Technique2 => {
                let mut names = vec!["confidence".to_string(), "accuracy".to_string()];
                names.extend((0..self.s).map(|j| format!("weight_{j}")));
                names
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let want = Self::expected_width(self.kind, self.s);
        if self.width() != want {
            return Err(Error::Shape(format!(
                "{:?} table is {} wide, expected {}",
                self.kind,
                self.width(),
                want
            )));
        }
        if self.instance_ids.len() != self.n_rows() {
            return Err(Error::Shape("one instance id per row".into()));
        }
        if let Some(v) = &self.version_ids {
            if v.len() != self.n_rows() {
                return Err(Error::Shape("one version id per row".into()));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.n_rows() {
                return Err(Error::Shape("one label per row".into()));
            }
        }
        Ok(())
    }
}

/// The error-representation features of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorFeatureRow<T> {
    /// Share of inner-train instances in the nearest cluster; in `(0, 1]`.
    pub confidence: T,
    /// Euclidean distance to every centroid, in reference column order.
    pub weight: Vec<T>,
    /// Nearest cluster's per-cluster accuracy; labeled pipelines only.
    pub accuracy: Option<T>,
}

impl<T: Scalar> ErrorFeatureRow<T> {
    /// Features of `z` against a fitted model, with weight entries
    /// re-indexed by `perm` (own cluster -> reference cluster).
    pub fn compute(
        z: &[T],
        model: &ClusterModel<T>,
        perm: &[usize],
        per_cluster: Option<&crate::cluster::PerClusterAccuracy<T>>,
    ) -> Result<Self> {
        let confidence = confidence(z, model)?;
        let own = weight(z, model)?;
        if perm.len() != own.len() {
            return Err(Error::Shape(format!(
                "permutation of {} entries for {} clusters",
                perm.len(),
                own.len()
            )));
        }
        let mut aligned = vec![T::zero(); own.len()];
        for (cluster, &value) in own.iter().enumerate() {
            aligned[perm[cluster]] = value;
        }
        let accuracy = match per_cluster {
            Some(per) => Some(accuracy_feature(z, model, per)?),
            None => None,
        };
        Ok(ErrorFeatureRow {
            confidence,
            weight: aligned,
            accuracy,
        })
    }

    /// Flat row in table order: confidence, weights, then accuracy if any.
    pub fn into_table_row(self) -> Vec<T> {
        let mut row = Vec::with_capacity(self.weight.len() + 2);
        row.push(self.confidence);
        row.extend(self.weight);
        if let Some(acc) = self.accuracy {
            row.push(acc);
        }
        row
    }
}

/// Fraction of all inner-train instances living in the cluster nearest to
/// `z`; ties go to the lowest cluster index. Always in `(0, 1]`.
pub fn confidence<T: Scalar>(z: &[T], model: &ClusterModel<T>) -> Result<T> {
    let total: usize = model.sizes().iter().sum();
    if total == 0 {
        return Err(Error::Empty("cluster model has no members".into()));
    }
    let nearest = model.nearest_cluster(z)?;
    Ok(T::from_usize(model.sizes()[nearest]).expect("size")
        / T::from_usize(total).expect("total"))
}

/// Euclidean distance from `z` to every centroid.
pub fn weight<T: Scalar>(z: &[T], model: &ClusterModel<T>) -> Result<Vec<T>> {
    if z.len() != model.centroids.cols() {
        return Err(Error::Shape(format!(
            "latent point of dim {} vs centroids of dim {}",
            z.len(),
            model.centroids.cols()
        )));
    }
    Ok((0..model.s())
        .map(|j| euclidean_distance(z, model.centroids.row(j)))
        .collect())
}

/// Per-cluster accuracy of the cluster nearest to `z`.
pub fn accuracy_feature<T: Scalar>(
    z: &[T],
    model: &ClusterModel<T>,
    per_cluster: &crate::cluster::PerClusterAccuracy<T>,
) -> Result<T> {
    if per_cluster.acc.len() != model.s() {
        return Err(Error::Shape(format!(
            "{} per-cluster accuracies for {} clusters",
            per_cluster.acc.len(),
            model.s()
        )));
    }
    let nearest = model.nearest_cluster(z)?;
    Ok(per_cluster.acc[nearest])
}
