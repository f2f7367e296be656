//! Rectangular numeric CSV ingestion.

use std::fs;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Loads a comma-separated numeric table with an optional single header row
/// (detected: any non-numeric cell in the first row).
///
/// With `label_column`, that 0-based column is split off as integer labels
/// and remapped to the contiguous range `[0, classes)`; the sorted original
/// values are recorded in the data set. Errors name the offending line.
pub fn load_csv<T: Scalar>(path: &Path, label_column: Option<usize>) -> Result<Dataset<T>> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, usize> = cells
            .iter()
            .enumerate()
            .map(|(col, cell)| cell.trim().parse::<f64>().map_err(|_| col))
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::Parse {
                            path: display,
                            line: line_no,
                            msg: format!("row has {} cells, expected {}", values.len(), w),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        path: display,
                        line: line_no,
                        msg: "non-finite value".into(),
                    });
                }
                rows.push(values);
            }
            Err(col) => {
                // a non-numeric first row is a header; anywhere else it is an error
                if rows.is_empty() && width.is_none() {
                    width = Some(cells.len());
                    continue;
                }
                return Err(Error::Parse {
                    path: display,
                    line: line_no,
                    msg: format!("column {} is not numeric: '{}'", col, cells[col].trim()),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::DataFormat {
            path: display,
            msg: "no data rows".into(),
        });
    }

    match label_column {
        None => {
            let data: Vec<T> = rows
                .iter()
                .flatten()
                .map(|&v| T::from_f64_lossy(v))
                .collect();
            let x = Matrix::from_vec(rows.len(), rows[0].len(), data)?;
            Ok(Dataset::unlabeled(x))
        }
        Some(col) => {
            let w = rows[0].len();
            if col >= w {
                return Err(Error::Config(format!(
                    "label column {col} out of {w} columns"
                )));
            }
            let mut raw_labels = Vec::with_capacity(rows.len());
            for (idx, row) in rows.iter().enumerate() {
                let v = row[col];
                if v.fract() != 0.0 {
                    return Err(Error::Parse {
                        path: display,
                        line: idx + 1,
                        msg: format!("label {v} is not an integer"),
                    });
                }
                raw_labels.push(v as i64);
            }
            let mut values: Vec<i64> = raw_labels.clone();
            values.sort_unstable();
            values.dedup();
            let labels: Vec<usize> = raw_labels
                .iter()
                .map(|v| values.binary_search(v).expect("value recorded"))
                .collect();
            let mut data = Vec::with_capacity(rows.len() * (w - 1));
            for row in &rows {
                for (j, &v) in row.iter().enumerate() {
                    if j != col {
                        data.push(T::from_f64_lossy(v));
                    }
                }
            }
            let x = Matrix::from_vec(rows.len(), w - 1, data)?;
            let mut ds = Dataset::labeled(x, labels)?;
            ds.label_values = Some(values);
            Ok(ds)
        }
    }
}
