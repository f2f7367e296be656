//! Unsupervised clustering accuracy: the best one-to-one mapping between
//! cluster indices and class labels, found by Hungarian assignment on the
//! negated contingency matrix.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{hungarian, HardClustering};

/// Optimal cluster-to-class mapping and the accuracy it attains.
///
/// The contingency table is padded to a square with zero rows/columns, so a
/// cluster may map to a class that never occurs (and vice versa).
pub fn accuracy_mapping<T: Scalar>(
    pred: &HardClustering,
    labels: &[usize],
) -> Result<(Vec<usize>, T)> {
    if labels.len() != pred.n() {
        return Err(Error::Shape(format!(
            "{} labels for {} instances",
            labels.len(),
            pred.n()
        )));
    }
    if pred.n() == 0 {
        return Err(Error::Empty("accuracy of an empty clustering".into()));
    }
    let classes = labels.iter().copied().max().expect("non-empty") + 1;
    let side = pred.s().max(classes);
    let mut counts = Matrix::<T>::zeros(side, side);
    for (i, &c) in pred.assignment().iter().enumerate() {
        let y = labels[i];
        counts.set(c, y, counts.get(c, y) + T::one());
    }
    let mapping = hungarian(&counts.map(|v| -v))?;
    let matched = mapping
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (c, &y)| acc + counts.get(c, y));
    let acc = matched / T::from_usize(pred.n()).expect("instance count");
    Ok((mapping[..pred.s()].to_vec(), acc))
}

/// Eq-style clustering accuracy in `[0, 1]`; invariant under any relabeling
/// of the cluster indices.
pub fn clustering_accuracy<T: Scalar>(pred: &HardClustering, labels: &[usize]) -> Result<T> {
    accuracy_mapping(pred, labels).map(|(_, acc)| acc)
}

/// Per-cluster accuracies under the global optimal mapping.
#[derive(Debug, Clone)]
pub struct PerClusterAccuracy<T> {
    /// Entry `j`: fraction of cluster `j`'s members whose label equals the
    /// mapped class of `j`; 0 for empty clusters.
    pub acc: Vec<T>,
    /// The global cluster-to-class mapping.
    pub mapping: Vec<usize>,
    /// Clusters that had no members.
    pub empty: Vec<bool>,
}

pub fn per_cluster_accuracy<T: Scalar>(
    pred: &HardClustering,
    labels: &[usize],
) -> Result<PerClusterAccuracy<T>> {
    let (mapping, _) = accuracy_mapping::<T>(pred, labels)?;
    let mut hits = vec![0usize; pred.s()];
    for (i, &c) in pred.assignment().iter().enumerate() {
        if labels[i] == mapping[c] {
            hits[c] += 1;
        }
    }
    let mut acc = Vec::with_capacity(pred.s());
    let mut empty = Vec::with_capacity(pred.s());
    for j in 0..pred.s() {
        let size = pred.sizes()[j];
        empty.push(size == 0);
        if size == 0 {
            acc.push(T::zero());
        } else {
            acc.push(T::from_usize(hits[j]).expect("hits") / T::from_usize(size).expect("size"));
        }
    }
    Ok(PerClusterAccuracy {
        acc,
        mapping,
        empty,
    })
}
