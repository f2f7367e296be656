//! Instance matrix plus optional integer class labels.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A loaded data set: `n` instances with `h` features each, and optionally a
/// label per instance remapped to the contiguous range `[0, classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub labels: Option<Vec<usize>>,
    /// Original label values, sorted; index in this vector is the remapped
    /// label. Present when the source data carried labels.
    pub label_values: Option<Vec<i64>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn unlabeled(x: Matrix<T>) -> Self {
        Dataset {
            x,
            labels: None,
            label_values: None,
        }
    }

    pub fn labeled(x: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} instances",
                labels.len(),
                x.rows()
            )));
        }
        let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Ok(Dataset {
            x,
            labels: Some(labels),
            label_values: Some((0..classes as i64).collect()),
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Number of distinct classes, when labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Config("this task needs labels".into()))
    }
}
