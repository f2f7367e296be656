//! The clustering and classification experiment drivers.

use std::time::Instant;

use crate::cluster::{clustering_accuracy, hca, kmeans, KmeansInit, Linkage, KMEANS_MAX_ITER, KMEANS_TOL};
use crate::dataset::Dataset;
use crate::dec::dec_fit;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::{
    aggregate_versions, ifl_classification_test_features, ifl_classification_train_features,
    ifl_cluster_features, package_technique1, package_technique2, IflFeatureTable,
};
use crate::matrix::Matrix;
use crate::nn::{train_autoencoder, Autoencoder};
use crate::scalar::Scalar;

use super::{
    knn_scores, mlp_classify, CellReport, ExperimentConfig, ExperimentReport, FeatureMode, Method,
    Task,
};

// Per-repeat seed streams.
const STREAM_IFL: u64 = 0x10;
const STREAM_IFL_TEST: u64 = 0x11;
const STREAM_METHOD_BASE: u64 = 0x20;

/// Column-wise standardization fitted on one matrix and applied to others.
struct ColumnStats<T> {
    mean: Vec<T>,
    scale: Vec<T>,
}

impl<T: Scalar> ColumnStats<T> {
    fn fit(m: &Matrix<T>) -> Self {
        let n = T::from_usize(m.rows().max(1)).expect("rows");
        let mean: Vec<T> = m.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![T::zero(); m.cols()];
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        ColumnStats { mean, scale }
    }

    fn apply(&self, m: &Matrix<T>) -> Matrix<T> {
        let mut out = m.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

fn repeat_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.repeats)
        .map(|i| cfg.master_seed.wrapping_add(i as u64))
        .collect()
}

fn classification_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Outcome of one clustering method run: final metric, plus the metric of
/// the k-means init for refinement methods.
struct MethodRun {
    acc: f64,
    init_acc: Option<f64>,
}

/// Best of several seeded k-means runs by inertia, the usual `n_init`
/// protection against a bad seeding.
fn kmeans_restarts<T: Scalar>(
    x: &Matrix<T>,
    s: usize,
    seed: u64,
) -> Result<crate::cluster::KmeansOutcome<T>> {
    let mut best: Option<crate::cluster::KmeansOutcome<T>> = None;
    for restart in 0..10u64 {
        let out = kmeans(
            x,
            s,
            &KmeansInit::Seeded,
            KMEANS_MAX_ITER,
            KMEANS_TOL,
            derive_seed(seed, 0x40 + restart),
        )?;
        best = match best {
            None => Some(out),
            Some(b) if out.inertia < b.inertia => Some(out),
            Some(b) => Some(b),
        };
    }
    Ok(best.expect("at least one restart"))
}

fn run_clustering_method<T: Scalar>(
    method: Method,
    x: &Matrix<T>,
    labels: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<MethodRun> {
    let s = cfg.clusters;
    match method {
        Method::KMeans => {
            let out = kmeans_restarts(x, s, seed)?;
            let acc: T = clustering_accuracy(&out.clustering, labels)?;
            Ok(MethodRun {
                acc: acc.to_f64().expect("metric"),
                init_acc: None,
            })
        }
        Method::HcaAverage | Method::HcaWard => {
            let linkage = if method == Method::HcaAverage {
                Linkage::Average
            } else {
                Linkage::Ward
            };
            let clustering = hca(x, s, linkage)?;
            let acc: T = clustering_accuracy(&clustering, labels)?;
            Ok(MethodRun {
                acc: acc.to_f64().expect("metric"),
                init_acc: None,
            })
        }
        Method::Dec => {
            let dims = Autoencoder::<T>::full_dims(x.cols(), &cfg.encoder_dims);
            let (ae, _) = train_autoencoder(x, &dims, &cfg.train_options::<T>(), seed)?;
            let model = dec_fit(&ae, x, s, &cfg.dec_config(), seed)?;
            let acc: T = clustering_accuracy(&model.hard, labels)?;
            let init: T = clustering_accuracy(&model.kmeans_init, labels)?;
            Ok(MethodRun {
                acc: acc.to_f64().expect("metric"),
                init_acc: Some(init.to_f64().expect("metric")),
            })
        }
        _ => Err(Error::Config(format!(
            "{} is not a clustering method",
            method.name()
        ))),
    }
}

/// Runs every configured clustering method on every feature mode for
/// `repeats` seeded repetitions, scoring with unsupervised clustering
/// accuracy against the data set labels.
pub fn run_clustering_experiment<T: Scalar>(
    data: &Dataset<T>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.task != Task::Clustering {
        return Err(Error::Config("configuration is not a clustering task".into()));
    }
    let labels = data.require_labels()?;
    let start = Instant::now();
    let seeds = repeat_seeds(cfg);
    let mut cells: Vec<CellReport> = Vec::new();
    for method in &cfg.methods {
        for mode in &cfg.feature_modes {
            cells.push(CellReport {
                method: method.name().to_string(),
                feature_mode: mode.name().to_string(),
                raw: Vec::new(),
                mean: None,
                variance: None,
                init_raw: if *method == Method::Dec {
                    Some(Vec::new())
                } else {
                    None
                },
                error: None,
                cell_ms: 0.0,
            });
        }
    }

    let needs_ifl = cfg.feature_modes.iter().any(FeatureMode::needs_ifl);
    for &repeat_seed in &seeds {
        let ifl_table = if needs_ifl {
            Some(ifl_cluster_features(
                &data.x,
                cfg.clusters,
                cfg.folds,
                &cfg.ifl_config::<T>(),
                derive_seed(repeat_seed, STREAM_IFL),
            )?)
        } else {
            None
        };
        for (mi, method) in cfg.methods.iter().enumerate() {
            let method_seed = derive_seed(repeat_seed, STREAM_METHOD_BASE + mi as u64);
            for (vi, mode) in cfg.feature_modes.iter().enumerate() {
                let cell = &mut cells[mi * cfg.feature_modes.len() + vi];
                if cell.error.is_some() {
                    continue;
                }
                let cell_start = Instant::now();
                let matrix = match mode {
                    FeatureMode::Primary => data.x.clone(),
                    FeatureMode::Ifl => ifl_table.as_ref().expect("built").features.clone(),
                    FeatureMode::PrimaryPlusIfl => {
                        let ifl = &ifl_table.as_ref().expect("built").features;
                        let ifl = if cfg.rescale_ifl {
                            ColumnStats::fit(ifl).apply(ifl)
                        } else {
                            ifl.clone()
                        };
                        data.x.hstack(&ifl)?
                    }
                };
                match run_clustering_method(*method, &matrix, labels, cfg, method_seed) {
                    Ok(run) => {
                        cell.raw.push(run.acc);
                        if let (Some(init_raw), Some(init)) =
                            (cell.init_raw.as_mut(), run.init_acc)
                        {
                            init_raw.push(init);
                        }
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
                cell.cell_ms += cell_start.elapsed().as_secs_f64() * 1e3;
            }
        }
    }
    for cell in &mut cells {
        cell.finish(cfg.repeats);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        run_config: None,
        seeds,
        cells,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Per-repeat learned features for one classification run.
struct ClassifierInputs<T> {
    train_features: Matrix<T>,
    train_labels: Vec<usize>,
    test_features: Matrix<T>,
    /// Present for technique 1: the test table whose provenance drives
    /// version aggregation.
    test_table: Option<IflFeatureTable<T>>,
}

#[allow(clippy::too_many_arguments)]
fn build_classifier_inputs<T: Scalar>(
    mode: FeatureMode,
    cfg: &ExperimentConfig,
    train: &Dataset<T>,
    test: &Dataset<T>,
    train_labels: &[usize],
    raw_train: Option<&IflFeatureTable<T>>,
    raw_test: Option<&IflFeatureTable<T>>,
) -> Result<ClassifierInputs<T>> {
    if mode == FeatureMode::Primary {
        return Ok(ClassifierInputs {
            train_features: train.x.clone(),
            train_labels: train_labels.to_vec(),
            test_features: test.x.clone(),
            test_table: None,
        });
    }
    let raw_train = raw_train.expect("learned features built for this mode");
    let raw_test = raw_test.expect("learned features built for this mode");
    if cfg.technique == 1 {
        let t1_train = package_technique1(raw_train)?;
        let t1_test = package_technique1(raw_test)?;
        let (train_ifl, test_ifl) = if cfg.rescale_ifl && mode == FeatureMode::PrimaryPlusIfl {
            let stats = ColumnStats::fit(&t1_train.features);
            (stats.apply(&t1_train.features), stats.apply(&t1_test.features))
        } else {
            (t1_train.features.clone(), t1_test.features.clone())
        };
        let train_features = match mode {
            FeatureMode::Ifl => train_ifl,
            _ => train
                .x
                .select_rows(&t1_train.instance_ids)
                .hstack(&train_ifl)?,
        };
        let test_features = match mode {
            FeatureMode::Ifl => test_ifl,
            _ => test.x.select_rows(&t1_test.instance_ids).hstack(&test_ifl)?,
        };
        let train_labels = t1_train
            .labels
            .clone()
            .ok_or_else(|| Error::Config("technique-1 train table lost its labels".into()))?;
        Ok(ClassifierInputs {
            train_features,
            train_labels,
            test_features,
            test_table: Some(t1_test),
        })
    } else {
        let t2_train = package_technique2(raw_train)?;
        let t2_test = package_technique2(raw_test)?;
        let (train_ifl, test_ifl) = if cfg.rescale_ifl && mode == FeatureMode::PrimaryPlusIfl {
            let stats = ColumnStats::fit(&t2_train.features);
            (stats.apply(&t2_train.features), stats.apply(&t2_test.features))
        } else {
            (t2_train.features.clone(), t2_test.features.clone())
        };
        let (train_features, test_features) = match mode {
            FeatureMode::Ifl => (train_ifl, test_ifl),
            _ => (train.x.hstack(&train_ifl)?, test.x.hstack(&test_ifl)?),
        };
        Ok(ClassifierInputs {
            train_features,
            train_labels: train_labels.to_vec(),
            test_features,
            test_table: None,
        })
    }
}

fn run_classifier<T: Scalar>(
    method: Method,
    inputs: &ClassifierInputs<T>,
    cfg: &ExperimentConfig,
    num_classes: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let scores = match method {
        Method::Knn => knn_scores(
            &inputs.train_features,
            &inputs.train_labels,
            &inputs.test_features,
            cfg.knn_k,
            num_classes,
        )?,
        Method::Mlp => {
            mlp_classify(
                &inputs.train_features,
                &inputs.train_labels,
                &inputs.test_features,
                &cfg.mlp_options::<T>(),
                seed,
            )?
            .scores
        }
        _ => {
            return Err(Error::Config(format!(
                "{} is not a classifier",
                method.name()
            )))
        }
    };
    match &inputs.test_table {
        Some(table) => Ok(aggregate_versions(&scores, table)?
            .into_iter()
            .map(|(_, label)| label)
            .collect()),
        None => Ok((0..scores.rows())
            .map(|i| {
                let row = scores.row(i);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()),
    }
}

/// Trains every configured classifier on every feature mode and scores plain
/// accuracy on the labeled test set. Learned features come from the labeled
/// pipeline on the training split and a single full-train model for the test
/// split, with weight columns aligned between the two.
pub fn run_classification_experiment<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.task != Task::Classification {
        return Err(Error::Config(
            "configuration is not a classification task".into(),
        ));
    }
    let train_labels = train.require_labels()?.to_vec();
    let test_labels = test.require_labels()?.to_vec();
    let classes = train.num_classes().expect("labeled");
    if classes != cfg.clusters {
        return Err(Error::Config(format!(
            "{} classes but {} clusters requested",
            classes, cfg.clusters
        )));
    }
    if test.dim() != train.dim() {
        return Err(Error::Shape(format!(
            "test width {} vs train width {}",
            test.dim(),
            train.dim()
        )));
    }

    let start = Instant::now();
    let seeds = repeat_seeds(cfg);
    let mut cells: Vec<CellReport> = Vec::new();
    for method in &cfg.methods {
        for mode in &cfg.feature_modes {
            cells.push(CellReport {
                method: method.name().to_string(),
                feature_mode: mode.name().to_string(),
                raw: Vec::new(),
                mean: None,
                variance: None,
                init_raw: None,
                error: None,
                cell_ms: 0.0,
            });
        }
    }

    let needs_ifl = cfg.feature_modes.iter().any(FeatureMode::needs_ifl);
    for &repeat_seed in &seeds {
        let (raw_train, raw_test) = if needs_ifl {
            let tf = ifl_classification_train_features(
                &train.x,
                &train_labels,
                cfg.clusters,
                cfg.folds,
                &cfg.ifl_config::<T>(),
                derive_seed(repeat_seed, STREAM_IFL),
            )?;
            let te = ifl_classification_test_features(
                &train.x,
                &train_labels,
                &test.x,
                cfg.clusters,
                &cfg.ifl_config::<T>(),
                derive_seed(repeat_seed, STREAM_IFL_TEST),
                Some(&tf.reference),
            )?;
            (Some(tf.table), Some(te))
        } else {
            (None, None)
        };
        for (mi, method) in cfg.methods.iter().enumerate() {
            let method_seed = derive_seed(repeat_seed, STREAM_METHOD_BASE + mi as u64);
            for (vi, mode) in cfg.feature_modes.iter().enumerate() {
                let cell = &mut cells[mi * cfg.feature_modes.len() + vi];
                if cell.error.is_some() {
                    continue;
                }
                let cell_start = Instant::now();
                let outcome = build_classifier_inputs(
                    *mode,
                    cfg,
                    train,
                    test,
                    &train_labels,
                    raw_train.as_ref(),
                    raw_test.as_ref(),
                )
                .and_then(|inputs| {
                    run_classifier(*method, &inputs, cfg, classes, method_seed)
                });
                match outcome {
                    Ok(pred) => cell
                        .raw
                        .push(classification_accuracy(&pred, &test_labels)),
                    Err(e) => cell.error = Some(e.to_string()),
                }
                cell.cell_ms += cell_start.elapsed().as_secs_f64() * 1e3;
            }
        }
    }
    for cell in &mut cells {
        cell.finish(cfg.repeats);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        run_config: None,
        seeds,
        cells,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
