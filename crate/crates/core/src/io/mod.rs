//! Data ingestion, feature/report export, and run configuration.

mod csv;
mod export;
mod idx;
mod projection;
mod run_config;

pub use csv::load_csv;
pub use export::{export_features, export_report, load_report};
pub use idx::load_idx;
pub use projection::export_projection;
pub use run_config::{DataSource, RunConfig, ScaleRule};
