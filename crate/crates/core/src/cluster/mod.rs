//! Classical clustering baselines and the unsupervised accuracy metric.

mod accuracy;
mod hca;
mod hungarian;
mod kmeans;

pub use accuracy::{accuracy_mapping, clustering_accuracy, per_cluster_accuracy, PerClusterAccuracy};
pub use hca::{hca, Linkage};
pub use hungarian::{hungarian, permutation_cost};
pub(crate) use kmeans::nearest as nearest_centroid;
pub use kmeans::{kmeans, KmeansInit, KmeansOutcome, KMEANS_MAX_ITER, KMEANS_TOL};

use crate::error::{Error, Result};

/// A hard partition of `n` instances into `s` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardClustering {
    assignment: Vec<usize>,
    s: usize,
    sizes: Vec<usize>,
}

impl HardClustering {
    /// Validates indices and tallies cluster sizes.
    pub fn new(assignment: Vec<usize>, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Config("cluster count must be positive".into()));
        }
        let mut sizes = vec![0usize; s];
        for (i, &c) in assignment.iter().enumerate() {
            if c >= s {
                return Err(Error::Shape(format!(
                    "instance {} assigned to cluster {} of {}",
                    i, c, s
                )));
            }
            sizes[c] += 1;
        }
        Ok(HardClustering {
            assignment,
            s,
            sizes,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Fraction of instances assigned differently in `other`.
    pub fn changed_fraction(&self, other: &HardClustering) -> f64 {
        debug_assert_eq!(self.n(), other.n());
        if self.n() == 0 {
            return 0.0;
        }
        let changed = self
            .assignment
            .iter()
            .zip(other.assignment.iter())
            .filter(|(a, b)| a != b)
            .count();
        changed as f64 / self.n() as f64
    }

    /// Relabels clusters: new index of cluster `c` is `perm[c]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.s {
            return Err(Error::Shape(format!(
                "permutation of length {} for {} clusters",
                perm.len(),
                self.s
            )));
        }
        let assignment = self.assignment.iter().map(|&c| perm[c]).collect();
        HardClustering::new(assignment, self.s)
    }
}
