//! Feature-table CSV export and report JSON round-tripping.
//!
//! Floats print in Rust's shortest round-trip form, so re-loading an export
//! reproduces the exact values, and re-serializing a loaded report is
//! byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::eval::ExperimentReport;
use crate::features::IflFeatureTable;
use crate::scalar::Scalar;

/// Writes a feature table as CSV: `instance_id[,version_id],features...[,label]`.
pub fn export_features<T: Scalar>(table: &IflFeatureTable<T>, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let mut header = vec!["instance_id".to_string()];
    if table.version_ids.is_some() {
        header.push("version_id".to_string());
    }
    header.extend(table.column_names());
    if table.labels.is_some() {
        header.push("label".to_string());
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..table.n_rows() {
        let mut cells = vec![table.instance_ids[i].to_string()];
        if let Some(v) = &table.version_ids {
            cells.push(v[i].to_string());
        }
        cells.extend(table.features.row(i).iter().map(|v| v.to_string()));
        if let Some(l) = &table.labels {
            cells.push(l[i].to_string());
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a report as pretty JSON with a trailing newline.
pub fn export_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    writeln!(out, "{json}")?;
    out.flush()?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| crate::error::Error::DataFormat {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}
