//! Feature packagings for classification.
//!
//! Technique 1 replicates each instance once per cluster with 3 features
//! `(confidence, weight of that cluster, accuracy)`; a classifier's
//! per-version outputs are folded back into one label per instance. Technique
//! 2 keeps one row per instance with `2 + s` features.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{IflFeatureTable, TableKind};

fn require_raw<T: Scalar>(raw: &IflFeatureTable<T>) -> Result<()> {
    if raw.kind != TableKind::ClassificationRaw {
        return Err(Error::Config(format!(
            "packaging expects raw labeled rows, got {:?}",
            raw.kind
        )));
    }
    Ok(())
}

/// One row per (instance, cluster version): `confidence, weight[v],
/// accuracy`. Confidence and accuracy repeat across an instance's versions;
/// labels are replicated.
pub fn package_technique1<T: Scalar>(raw: &IflFeatureTable<T>) -> Result<IflFeatureTable<T>> {
    require_raw(raw)?;
    let s = raw.s;
    let n = raw.n_rows();
    let acc_col = raw.width() - 1;
    let mut features = Matrix::zeros(n * s, 3);
    let mut instance_ids = Vec::with_capacity(n * s);
    let mut version_ids = Vec::with_capacity(n * s);
    let mut labels = raw.labels.as_ref().map(|_| Vec::with_capacity(n * s));
    for i in 0..n {
        let conf = raw.features.get(i, 0);
        let acc = raw.features.get(i, acc_col);
        for v in 0..s {
            let row = i * s + v;
            features.set(row, 0, conf);
            features.set(row, 1, raw.features.get(i, 1 + v));
            features.set(row, 2, acc);
            instance_ids.push(raw.instance_ids[i]);
            version_ids.push(v);
            if let (Some(out), Some(src)) = (labels.as_mut(), raw.labels.as_ref()) {
                out.push(src[i]);
            }
        }
    }
    Ok(IflFeatureTable {
        kind: TableKind::Technique1,
        features,
        instance_ids,
        version_ids: Some(version_ids),
        labels,
        s,
        warnings: raw.warnings.clone(),
    })
}

/// One row per instance: `confidence, accuracy, weight_0..weight_{s-1}`.
pub fn package_technique2<T: Scalar>(raw: &IflFeatureTable<T>) -> Result<IflFeatureTable<T>> {
    require_raw(raw)?;
    let s = raw.s;
    let n = raw.n_rows();
    let acc_col = raw.width() - 1;
    let mut features = Matrix::zeros(n, 2 + s);
    for i in 0..n {
        features.set(i, 0, raw.features.get(i, 0));
        features.set(i, 1, raw.features.get(i, acc_col));
        for v in 0..s {
            features.set(i, 2 + v, raw.features.get(i, 1 + v));
        }
    }
    Ok(IflFeatureTable {
        kind: TableKind::Technique2,
        features,
        instance_ids: raw.instance_ids.clone(),
        version_ids: None,
        labels: raw.labels.clone(),
        s,
        warnings: raw.warnings.clone(),
    })
}

/// Folds per-version class scores back into one label per instance: scores
/// are summed across an instance's versions and the argmax wins, lowest class
/// index on ties. Returns `(instance id, label)` pairs sorted by id.
pub fn aggregate_versions<T: Scalar>(
    scores: &Matrix<T>,
    table: &IflFeatureTable<T>,
) -> Result<Vec<(usize, usize)>> {
    if table.kind != TableKind::Technique1 {
        return Err(Error::Config(
            "version aggregation applies to technique-1 tables".into(),
        ));
    }
    if scores.rows() != table.n_rows() {
        return Err(Error::Shape(format!(
            "{} score rows for {} table rows",
            scores.rows(),
            table.n_rows()
        )));
    }
    let mut ids: Vec<usize> = table.instance_ids.clone();
    ids.sort_unstable();
    ids.dedup();
    let max_id = ids.last().copied().unwrap_or(0);
    let mut sums: Vec<Option<Vec<T>>> = vec![None; max_id + 1];
    let mut counts: Vec<usize> = vec![0; max_id + 1];
    for (row, &gid) in table.instance_ids.iter().enumerate() {
        let slot = sums[gid].get_or_insert_with(|| vec![T::zero(); scores.cols()]);
        for (acc, &v) in slot.iter_mut().zip(scores.row(row)) {
            *acc += v;
        }
        counts[gid] += 1;
    }
    let versions = table.s;
    let mut out = Vec::with_capacity(ids.len());
    for &gid in &ids {
        if counts[gid] != versions {
            return Err(Error::Shape(format!(
                "instance {gid} has {} of {versions} versions",
                counts[gid]
            )));
        }
        let total = sums[gid].as_ref().expect("counted instance");
        let mut best = 0;
        for (k, &v) in total.iter().enumerate() {
            if v > total[best] {
                best = k;
            }
        }
        out.push((gid, best));
    }
    Ok(out)
}

/// Majority vote over hard per-version labels. Vote ties go to the class
/// whose supporting version has the smallest weight value (the most confident
/// assignment); exact weight ties fall back to the lowest class index.
pub fn aggregate_versions_hard<T: Scalar>(
    predictions: &[usize],
    table: &IflFeatureTable<T>,
    num_classes: usize,
) -> Result<Vec<(usize, usize)>> {
    if table.kind != TableKind::Technique1 {
        return Err(Error::Config(
            "version aggregation applies to technique-1 tables".into(),
        ));
    }
    if predictions.len() != table.n_rows() {
        return Err(Error::Shape(format!(
            "{} predictions for {} table rows",
            predictions.len(),
            table.n_rows()
        )));
    }
    let mut ids: Vec<usize> = table.instance_ids.clone();
    ids.sort_unstable();
    ids.dedup();
    let max_id = ids.last().copied().unwrap_or(0);
    let mut votes: Vec<Vec<usize>> = vec![vec![0; num_classes]; max_id + 1];
    let mut best_weight: Vec<Vec<T>> = vec![vec![T::infinity(); num_classes]; max_id + 1];
    for (row, &gid) in table.instance_ids.iter().enumerate() {
        let label = predictions[row];
        if label >= num_classes {
            return Err(Error::Config(format!(
                "prediction {label} out of {num_classes} classes"
            )));
        }
        votes[gid][label] += 1;
        let w = table.features.get(row, 1);
        if w < best_weight[gid][label] {
            best_weight[gid][label] = w;
        }
    }
    let mut out = Vec::with_capacity(ids.len());
    for &gid in &ids {
        let top = *votes[gid].iter().max().expect("classes");
        let mut winner = None::<usize>;
        for k in 0..num_classes {
            if votes[gid][k] != top {
                continue;
            }
            winner = Some(match winner {
                None => k,
                Some(w) => {
                    if best_weight[gid][k] < best_weight[gid][w] {
                        k
                    } else {
                        w
                    }
                }
            });
        }
        out.push((gid, winner.expect("at least one class voted")));
    }
    Ok(out)
}
