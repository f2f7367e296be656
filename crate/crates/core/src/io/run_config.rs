//! Run configuration shared by the CLI and config files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::ExperimentConfig;
use crate::scalar::Scalar;

/// Input scaling applied after load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleRule {
    #[default]
    None,
    /// Divide by the largest value (images to `[0, 1]`; IDX data is already
    /// scaled by the format maximum on load).
    DivideByMax,
    /// Divide by two (`[-1, 1]` data to `[-0.5, 0.5]`).
    DivideByTwo,
}

/// Where a data matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_column: Option<usize>,
        #[serde(default)]
        scale: ScaleRule,
    },
    IdxPair {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        scale: ScaleRule,
    },
}

impl DataSource {
    pub fn load<T: Scalar>(&self) -> Result<Dataset<T>> {
        let (mut ds, scale) = match self {
            DataSource::Csv {
                path,
                label_column,
                scale,
            } => (super::load_csv::<T>(path, *label_column)?, *scale),
            DataSource::IdxPair {
                images,
                labels,
                scale,
            } => (super::load_idx::<T>(images, labels)?, *scale),
        };
        match scale {
            ScaleRule::None => {}
            ScaleRule::DivideByMax => {
                let max = ds.x.max_abs();
                if max > T::zero() {
                    ds.x = ds.x.scale(T::one() / max);
                }
            }
            ScaleRule::DivideByTwo => {
                ds.x = ds.x.scale(T::from_f64_lossy(0.5));
            }
        }
        Ok(ds)
    }
}

/// Everything a command-line run needs: data sources, the experiment
/// configuration, and output paths. Serialized into every report so a run
/// can be replayed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_data: Option<DataSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_data: Option<DataSource>,
    pub experiment: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!(
            "{}: {e}",
            path.display()
        )))
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}
