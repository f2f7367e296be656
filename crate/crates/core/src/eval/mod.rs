//! Experiment drivers with repeat/variance reporting.
//!
//! A configured experiment runs every requested method on every requested
//! feature mode for `repeats` seeded repetitions and reports per-cell raw
//! metrics, their mean, and the population variance. Reports serialize to
//! canonical JSON and are bit-identical for a fixed master seed.

mod experiment;
mod knn;
mod mlp;

pub use experiment::{run_classification_experiment, run_clustering_experiment};
pub use knn::{knn_predict, knn_scores};
pub use mlp::{mlp_classify, MlpOptions, MlpOutcome};

use serde::{Deserialize, Serialize};

use crate::dec::DecConfig;
use crate::error::{Error, Result};
use crate::features::IflConfig;
use crate::nn::{AdamConfig, TrainOptions};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Clustering,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "kmeans")]
    KMeans,
    HcaAverage,
    HcaWard,
    Dec,
    Knn,
    Mlp,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::HcaAverage => "hca-average",
            Method::HcaWard => "hca-ward",
            Method::Dec => "dec",
            Method::Knn => "knn",
            Method::Mlp => "mlp",
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Method::KMeans | Method::HcaAverage | Method::HcaWard | Method::Dec => {
                Task::Clustering
            }
            Method::Knn | Method::Mlp => Task::Classification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    #[serde(rename = "primary")]
    Primary,
    #[serde(rename = "ifl")]
    Ifl,
    #[serde(rename = "primary+ifl")]
    PrimaryPlusIfl,
}

impl FeatureMode {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureMode::Primary => "primary",
            FeatureMode::Ifl => "ifl",
            FeatureMode::PrimaryPlusIfl => "primary+ifl",
        }
    }

    pub fn needs_ifl(&self) -> bool {
        !matches!(self, FeatureMode::Primary)
    }
}

/// Everything an experiment needs; plain `f64` fields so the whole struct
/// round-trips through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub task: Task,
    pub methods: Vec<Method>,
    pub feature_modes: Vec<FeatureMode>,
    /// Cluster count `s`; must equal the class count for classification.
    pub clusters: usize,
    /// Inner-folding fold count `r`.
    pub folds: usize,
    pub repeats: usize,
    pub master_seed: u64,
    /// Encoder interior (`hidden..., latent`); mirrored into the decoder.
    pub encoder_dims: Vec<usize>,
    pub ae_epochs: usize,
    pub ae_batch_size: usize,
    pub ae_learning_rate: f64,
    pub dec_alpha: f64,
    pub dec_tol: f64,
    pub dec_max_iter: usize,
    pub dec_update_interval: usize,
    pub dec_learning_rate: f64,
    /// Classification packaging: 1 or 2.
    pub technique: u8,
    pub knn_k: usize,
    pub mlp_hidden_dims: Vec<usize>,
    pub mlp_epochs: usize,
    /// Standardize learned feature columns (train statistics) before
    /// concatenating them with primary features.
    pub rescale_ifl: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Clustering,
            methods: vec![
                Method::KMeans,
                Method::HcaAverage,
                Method::HcaWard,
                Method::Dec,
            ],
            feature_modes: vec![
                FeatureMode::Primary,
                FeatureMode::Ifl,
                FeatureMode::PrimaryPlusIfl,
            ],
            clusters: 2,
            folds: 10,
            repeats: 5,
            master_seed: 0,
            encoder_dims: vec![500, 500, 2000, 10],
            ae_epochs: 50,
            ae_batch_size: 256,
            ae_learning_rate: 1e-3,
            dec_alpha: 1.0,
            dec_tol: 1e-3,
            dec_max_iter: 100,
            dec_update_interval: 1,
            dec_learning_rate: 1e-3,
            technique: 1,
            knn_k: 5,
            mlp_hidden_dims: vec![64],
            mlp_epochs: 100,
            rescale_ifl: false,
        }
    }
}

impl ExperimentConfig {
    pub fn default_classification() -> Self {
        ExperimentConfig {
            task: Task::Classification,
            methods: vec![Method::Knn, Method::Mlp],
            feature_modes: vec![FeatureMode::Primary, FeatureMode::PrimaryPlusIfl],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() || self.feature_modes.is_empty() {
            return Err(Error::Config("nothing to run".into()));
        }
        for m in &self.methods {
            if m.task() != self.task {
                return Err(Error::Config(format!(
                    "method {} does not apply to {:?}",
                    m.name(),
                    self.task
                )));
            }
        }
        if self.clusters == 0 {
            return Err(Error::Config("cluster count must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("inner folding needs at least 2 folds".into()));
        }
        if !(1..=2).contains(&self.technique) {
            return Err(Error::Config(format!(
                "technique {} is not 1 or 2",
                self.technique
            )));
        }
        if self.encoder_dims.is_empty() {
            return Err(Error::Config("encoder needs at least the latent width".into()));
        }
        self.dec_config::<f64>().validate()
    }

    pub fn train_options<T: Scalar>(&self) -> TrainOptions<T> {
        TrainOptions {
            epochs: self.ae_epochs,
            batch_size: self.ae_batch_size,
            adam: AdamConfig::with_learning_rate(T::from_f64_lossy(self.ae_learning_rate)),
        }
    }

    pub fn dec_config<T: Scalar>(&self) -> DecConfig<T> {
        DecConfig {
            alpha: T::from_f64_lossy(self.dec_alpha),
            tol: T::from_f64_lossy(self.dec_tol),
            max_iter: self.dec_max_iter,
            update_interval: self.dec_update_interval,
            learning_rate: T::from_f64_lossy(self.dec_learning_rate),
        }
    }

    pub fn ifl_config<T: Scalar>(&self) -> IflConfig<T> {
        IflConfig {
            encoder_dims: self.encoder_dims.clone(),
            train: self.train_options(),
            dec: self.dec_config(),
        }
    }

    pub fn mlp_options<T: Scalar>(&self) -> MlpOptions<T> {
        MlpOptions {
            hidden_dims: self.mlp_hidden_dims.clone(),
            epochs: self.mlp_epochs,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

/// One (method, feature mode) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: String,
    pub feature_mode: String,
    /// Metric per repeat (clustering accuracy / classification accuracy).
    pub raw: Vec<f64>,
    pub mean: Option<f64>,
    /// Population variance over the repeats.
    pub variance: Option<f64>,
    /// For refinement methods: the metric of the k-means initialization per
    /// repeat, to expose the refinement delta.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_raw: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub cell_ms: f64,
}

impl CellReport {
    pub(crate) fn finish(&mut self, repeats: usize) {
        if self.raw.len() == repeats && self.error.is_none() {
            self.mean = Some(mean(&self.raw));
            self.variance = Some(population_variance(&self.raw));
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// A full experiment result: config echo, derived seeds, and one cell per
/// (method, feature mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Resolved command-line configuration, when the run came from the CLI.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
    /// Per-repeat seeds, derived from the master seed by fixed increments.
    pub seeds: Vec<u64>,
    pub cells: Vec<CellReport>,
    pub total_ms: f64,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, mode: FeatureMode) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.method == method.name() && c.feature_mode == mode.name())
    }

    /// Copy with wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        copy.total_ms = 0.0;
        for cell in &mut copy.cells {
            cell.cell_ms = 0.0;
        }
        copy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert!(json.contains("\"kmeans\""));
        assert!(json.contains("\"hca-average\""));
        assert!(json.contains("\"primary+ifl\""));
    }

    #[test]
    fn validation_rejects_mismatched_methods() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Knn],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            technique: 3,
            ..ExperimentConfig::default_classification()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn variance_is_population_variance() {
        let raw = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&raw), 2.5);
        assert_eq!(population_variance(&raw), 1.25);
    }
}
