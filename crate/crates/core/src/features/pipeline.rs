//! The feature-learning pipelines.
//!
//! Clustering: every fold is held out once, a fresh autoencoder + refinement
//! model is fit on the other `r - 1` folds, and the held-out instances are
//! featurized against it. Classification adds the accuracy-of-assignment
//! feature from inner-train labels; test data skips inner folding and is
//! featurized against a single model fit on all training data.

use crate::cluster::{clustering_accuracy, per_cluster_accuracy};
use crate::dec::{dec_fit, ClusterModel};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{train_autoencoder, Autoencoder};
use crate::scalar::Scalar;

use super::folding::FoldAssignment;
use super::tracking::{track_clusters, TrackedRun};
use super::{ErrorFeatureRow, IflConfig, IflFeatureTable, TableKind};

// Seed streams, one per pipeline stage.
const STREAM_FOLDS: u64 = 0x01;
const STREAM_RUN_BASE: u64 = 0x100;
const STREAM_FULL_TRAIN: u64 = 0x02;

/// Reference-run memberships, kept so later models (the full-train test
/// model) can align their cluster indices with the train feature columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReference {
    pub instance_ids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub s: usize,
    /// Fold count of the producing pipeline; feeds the trackability
    /// threshold.
    pub r: usize,
}

impl RunReference {
    fn from_tracked<T: Scalar>(run: &TrackedRun<T>, r: usize) -> Self {
        RunReference {
            instance_ids: run.instance_ids.clone(),
            assignment: run.model.hard.assignment().to_vec(),
            s: run.model.s(),
            r,
        }
    }

    fn to_tracked<T: Scalar>(&self) -> Result<TrackedRun<T>> {
        use crate::cluster::HardClustering;
        use crate::nn::{Activation, Network};
        let hard = HardClustering::new(self.assignment.clone(), self.s)?;
        Ok(TrackedRun {
            run_index: 0,
            model: ClusterModel {
                encoder: Network::zeros(&[1, 1], vec![Activation::Linear])?,
                centroids: Matrix::zeros(self.s, 1),
                hard: hard.clone(),
                kmeans_init: hard,
                converged: true,
            },
            instance_ids: self.instance_ids.clone(),
            alignment: (0..self.s).collect(),
            trackable: true,
        })
    }
}

/// Train-side classification features plus the reference run for aligning
/// the matching test features.
#[derive(Debug, Clone)]
pub struct TrainFeatures<T> {
    pub table: IflFeatureTable<T>,
    pub reference: RunReference,
}

fn fit_run<T: Scalar>(
    x_train: &Matrix<T>,
    s: usize,
    cfg: &IflConfig<T>,
    seed: u64,
) -> Result<ClusterModel<T>> {
    let dims = Autoencoder::<T>::full_dims(x_train.cols(), &cfg.encoder_dims);
    let (ae, _log) = train_autoencoder(x_train, &dims, &cfg.train, seed)?;
    dec_fit(&ae, x_train, s, &cfg.dec, seed)
}

fn check_pipeline_input<T: Scalar>(x: &Matrix<T>, s: usize, r: usize) -> Result<()> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("feature learning input".into()));
    }
    if n < r {
        return Err(Error::Config(format!("{r} folds for {n} instances")));
    }
    let inner_train = n - n.div_ceil(r);
    if inner_train < s {
        return Err(Error::Config(format!(
            "inner-train size {inner_train} cannot form {s} clusters"
        )));
    }
    Ok(())
}

/// Scatters a run's aligned feature rows into the global table.
#[allow(clippy::too_many_arguments)]
fn featurize_fold<T: Scalar>(
    model: &ClusterModel<T>,
    x_test: &Matrix<T>,
    test_ids: &[usize],
    perm: &[usize],
    s: usize,
    rows: &mut [Option<Vec<T>>],
    accuracy: Option<&crate::cluster::PerClusterAccuracy<T>>,
) -> Result<()> {
    let z = model.encode(x_test)?;
    debug_assert_eq!(model.s(), s);
    for (local, &gid) in test_ids.iter().enumerate() {
        let features = ErrorFeatureRow::compute(z.row(local), model, perm, accuracy)?;
        rows[gid] = Some(features.into_table_row());
    }
    Ok(())
}

fn assemble<T: Scalar>(
    rows: Vec<Option<Vec<T>>>,
    kind: TableKind,
    s: usize,
    labels: Option<Vec<usize>>,
    warnings: Vec<String>,
) -> Result<IflFeatureTable<T>> {
    let dense: Vec<Vec<T>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::Shape(format!("instance {i} was never featurized"))))
        .collect::<Result<_>>()?;
    let features = Matrix::from_rows(&dense)?;
    let n = features.rows();
    Ok(IflFeatureTable {
        kind,
        features,
        instance_ids: (0..n).collect(),
        version_ids: None,
        labels,
        s,
        warnings,
    })
}

/// Unlabeled pipeline: one `confidence, weight_0..weight_{s-1}` row per
/// instance, columns aligned to the first run. Deterministic per seed.
pub fn ifl_cluster_features<T: Scalar>(
    x: &Matrix<T>,
    s: usize,
    r: usize,
    cfg: &IflConfig<T>,
    seed: u64,
) -> Result<IflFeatureTable<T>> {
    run_inner_folding(x, None, s, r, cfg, seed).map(|(table, _)| table)
}

/// Labeled pipeline: raw rows `confidence, weight_0.., accuracy` plus the
/// reference run for aligning test features.
pub fn ifl_classification_train_features<T: Scalar>(
    x: &Matrix<T>,
    labels: &[usize],
    s: usize,
    r: usize,
    cfg: &IflConfig<T>,
    seed: u64,
) -> Result<TrainFeatures<T>> {
    if labels.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} instances",
            labels.len(),
            x.rows()
        )));
    }
    let (table, reference) = run_inner_folding(x, Some(labels), s, r, cfg, seed)?;
    Ok(TrainFeatures {
        table,
        reference: reference.expect("labeled pipeline keeps its reference"),
    })
}

fn run_inner_folding<T: Scalar>(
    x: &Matrix<T>,
    labels: Option<&[usize]>,
    s: usize,
    r: usize,
    cfg: &IflConfig<T>,
    seed: u64,
) -> Result<(IflFeatureTable<T>, Option<RunReference>)> {
    check_pipeline_input(x, s, r)?;
    let n = x.rows();
    let folds = FoldAssignment::seeded(n, r, derive_seed(seed, STREAM_FOLDS))?;
    let mut rows: Vec<Option<Vec<T>>> = vec![None; n];
    let mut warnings = Vec::new();
    let mut reference: Option<TrackedRun<T>> = None;

    for j in 0..r {
        let run_seed = derive_seed(seed, STREAM_RUN_BASE + j as u64);
        let train_ids = folds.train_ids(j);
        let test_ids = folds.test_ids(j);
        let x_train = x.select_rows(&train_ids);
        let model = fit_run(&x_train, s, cfg, run_seed).map_err(|e| e.in_run(j))?;

        // Labeled runs score themselves against the inner-train labels.
        let (acc_proxy, per_cluster) = match labels {
            Some(all) => {
                let train_labels: Vec<usize> = train_ids.iter().map(|&i| all[i]).collect();
                let distinct = {
                    let mut d = train_labels.clone();
                    d.sort_unstable();
                    d.dedup();
                    d.len()
                };
                if distinct < s {
                    warnings.push(format!(
                        "run {j}: only {distinct} of {s} classes present in the inner-train folds"
                    ));
                }
                let acc = clustering_accuracy(&model.hard, &train_labels)?;
                let per = per_cluster_accuracy(&model.hard, &train_labels)?;
                (Some(acc), Some(per))
            }
            None => (None, None),
        };

        let perm: Vec<usize> = match &reference {
            None => (0..s).collect(),
            Some(reference) => {
                let alignment =
                    track_clusters(reference, &model, &train_ids, r, acc_proxy)
                        .map_err(|e| e.in_run(j))?;
                if !alignment.trackable {
                    warnings.push(format!(
                        "run {j}: accuracy proxy below the trackability threshold, \
                         weight columns may be misaligned"
                    ));
                }
                alignment.perm
            }
        };

        featurize_fold(
            &model,
            &x.select_rows(&test_ids),
            &test_ids,
            &perm,
            s,
            &mut rows,
            per_cluster.as_ref(),
        )
        .map_err(|e| e.in_run(j))?;

        if reference.is_none() {
            reference = Some(TrackedRun::reference(j, model, train_ids));
        }
    }

    let kind = if labels.is_some() {
        TableKind::ClassificationRaw
    } else {
        TableKind::Clustering
    };
    let table = assemble(
        rows,
        kind,
        s,
        labels.map(|l| l.to_vec()),
        warnings,
    )?;
    table.validate()?;
    let reference = reference.map(|t| RunReference::from_tracked(&t, r));
    Ok((table, reference))
}

/// Test-side features: one refinement model fit on all training data, no
/// inner folding. When `reference` is given (from
/// [`ifl_classification_train_features`]), the weight columns are aligned to
/// the train feature columns.
pub fn ifl_classification_test_features<T: Scalar>(
    x_train: &Matrix<T>,
    y_train: &[usize],
    x_test: &Matrix<T>,
    s: usize,
    cfg: &IflConfig<T>,
    seed: u64,
    reference: Option<&RunReference>,
) -> Result<IflFeatureTable<T>> {
    if y_train.len() != x_train.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} training instances",
            y_train.len(),
            x_train.rows()
        )));
    }
    if x_train.rows() < s {
        return Err(Error::Config(format!(
            "{} training instances cannot form {s} clusters",
            x_train.rows()
        )));
    }
    let mut warnings = Vec::new();
    let model = fit_run(x_train, s, cfg, derive_seed(seed, STREAM_FULL_TRAIN))?;
    let acc = clustering_accuracy(&model.hard, y_train)?;
    let per_cluster = per_cluster_accuracy(&model.hard, y_train)?;

    let perm: Vec<usize> = match reference {
        None => (0..s).collect(),
        Some(reference) => {
            let tracked = reference.to_tracked::<T>()?;
            let all_ids: Vec<usize> = (0..x_train.rows()).collect();
            let alignment = track_clusters(&tracked, &model, &all_ids, reference.r, Some(acc))?;
            if !alignment.trackable {
                warnings.push(
                    "full-train model below the trackability threshold against the reference run"
                        .to_string(),
                );
            }
            alignment.perm
        }
    };

    if x_test.rows() == 0 {
        return Ok(IflFeatureTable {
            kind: TableKind::ClassificationRaw,
            features: Matrix::zeros(0, s + 2),
            instance_ids: Vec::new(),
            version_ids: None,
            labels: None,
            s,
            warnings,
        });
    }

    let mut rows: Vec<Option<Vec<T>>> = vec![None; x_test.rows()];
    let test_ids: Vec<usize> = (0..x_test.rows()).collect();
    featurize_fold(
        &model,
        x_test,
        &test_ids,
        &perm,
        s,
        &mut rows,
        Some(&per_cluster),
    )?;
    let mut table = assemble(rows, TableKind::ClassificationRaw, s, None, warnings)?;
    table.validate()?;
    table.labels = None;
    Ok(table)
}
