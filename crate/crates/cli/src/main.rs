//! `ifl` — learn error-representation features and run clustering /
//! classification experiments with them.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ifl_core::dec::dec_fit;
use ifl_core::eval::{
    run_classification_experiment, run_clustering_experiment, ExperimentReport, FeatureMode,
    Method, Task,
};
use ifl_core::features::{ifl_classification_train_features, ifl_cluster_features};
use ifl_core::io::{
    export_features, export_projection, export_report, DataSource, RunConfig, ScaleRule,
};
use ifl_core::nn::{train_autoencoder, Autoencoder};
use ifl_core::{derive_seed, Dataset, Error};

#[derive(Parser)]
#[command(name = "ifl", version, about = "Error-representation feature learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run clustering methods over primary and/or learned features.
    Cluster(ClusterCmd),
    /// Train classifiers over primary and/or learned features.
    Classify(ClassifyCmd),
    /// Emit the learned feature table as CSV.
    Features(FeaturesCmd),
    /// Export a 2-D principal-component projection of the latent space.
    Project(ProjectCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    None,
    Max,
    Half,
}

impl From<ScaleArg> for ScaleRule {
    fn from(v: ScaleArg) -> ScaleRule {
        match v {
            ScaleArg::None => ScaleRule::None,
            ScaleArg::Max => ScaleRule::DivideByMax,
            ScaleArg::Half => ScaleRule::DivideByTwo,
        }
    }
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Numeric CSV data file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// 0-based label column within --data.
    #[arg(long)]
    label_col: Option<usize>,
    /// IDX image file (use with --idx-labels).
    #[arg(long)]
    idx_images: Option<PathBuf>,
    /// IDX label file (use with --idx-images).
    #[arg(long)]
    idx_labels: Option<PathBuf>,
    /// Input scaling: none, max (divide by max), half (divide by two).
    #[arg(long, value_enum, default_value_t = ScaleArg::None)]
    scale: ScaleArg,
}

impl SourceArgs {
    fn to_source(&self) -> Result<Option<DataSource>, Error> {
        match (&self.data, &self.idx_images, &self.idx_labels) {
            (Some(path), None, None) => Ok(Some(DataSource::Csv {
                path: path.clone(),
                label_column: self.label_col,
                scale: self.scale.into(),
            })),
            (None, Some(images), Some(labels)) => Ok(Some(DataSource::IdxPair {
                images: images.clone(),
                labels: labels.clone(),
                scale: self.scale.into(),
            })),
            (None, None, None) => Ok(None),
            _ => Err(Error::Config(
                "give either --data or both --idx-images and --idx-labels".into(),
            )),
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON run-configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of clusters (classification: must equal the class count).
    #[arg(long, short = 's')]
    clusters: Option<usize>,
    /// Inner-folding fold count.
    #[arg(long, short = 'r')]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated methods (kmeans,hca-average,hca-ward,dec | knn,mlp).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Comma-separated feature modes (primary,ifl,primary+ifl).
    #[arg(long, value_delimiter = ',')]
    modes: Vec<String>,
    /// Encoder interior widths, e.g. 500,500,2000,10.
    #[arg(long, value_delimiter = ',')]
    encoder_dims: Vec<usize>,
    #[arg(long)]
    ae_epochs: Option<usize>,
    #[arg(long)]
    ae_batch_size: Option<usize>,
    #[arg(long)]
    ae_lr: Option<f64>,
    #[arg(long)]
    dec_alpha: Option<f64>,
    #[arg(long)]
    dec_tol: Option<f64>,
    #[arg(long)]
    dec_max_iter: Option<usize>,
    #[arg(long)]
    dec_update_interval: Option<usize>,
    #[arg(long)]
    dec_lr: Option<f64>,
    /// Classification packaging technique: 1 or 2.
    #[arg(long)]
    technique: Option<u8>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    mlp_hidden: Vec<usize>,
    #[arg(long)]
    mlp_epochs: Option<usize>,
    /// Standardize learned feature columns before concatenation.
    #[arg(long)]
    rescale_ifl: bool,
    /// Output path (report JSON / feature CSV / projection CSV).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, Error> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown method '{s}'")))
}

fn parse_mode(s: &str) -> Result<FeatureMode, Error> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown feature mode '{s}'")))
}

impl ExperimentArgs {
    /// Config file first, flags on top.
    fn resolve(&self, task: Task) -> Result<RunConfig, Error> {
        let mut rc = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let exp = &mut rc.experiment;
        exp.task = task;
        if self.methods.is_empty() && exp.methods.iter().any(|m| m.task() != task) {
            exp.methods = match task {
                Task::Clustering => vec![
                    Method::KMeans,
                    Method::HcaAverage,
                    Method::HcaWard,
                    Method::Dec,
                ],
                Task::Classification => vec![Method::Knn, Method::Mlp],
            };
        }
        if !self.methods.is_empty() {
            exp.methods = self
                .methods
                .iter()
                .map(|s| parse_method(s))
                .collect::<Result<_, _>>()?;
        }
        if !self.modes.is_empty() {
            exp.feature_modes = self
                .modes
                .iter()
                .map(|s| parse_mode(s))
                .collect::<Result<_, _>>()?;
        }
        if !self.encoder_dims.is_empty() {
            exp.encoder_dims = self.encoder_dims.clone();
        }
        if !self.mlp_hidden.is_empty() {
            exp.mlp_hidden_dims = self.mlp_hidden.clone();
        }
        macro_rules! set {
            ($field:ident, $arg:expr) => {
                if let Some(v) = $arg {
                    exp.$field = v;
                }
            };
        }
        set!(clusters, self.clusters);
        set!(folds, self.folds);
        set!(repeats, self.repeats);
        set!(master_seed, self.seed);
        set!(ae_epochs, self.ae_epochs);
        set!(ae_batch_size, self.ae_batch_size);
        set!(ae_learning_rate, self.ae_lr);
        set!(dec_alpha, self.dec_alpha);
        set!(dec_tol, self.dec_tol);
        set!(dec_max_iter, self.dec_max_iter);
        set!(dec_update_interval, self.dec_update_interval);
        set!(dec_learning_rate, self.dec_lr);
        set!(technique, self.technique);
        set!(knn_k, self.knn_k);
        set!(mlp_epochs, self.mlp_epochs);
        if self.rescale_ifl {
            exp.rescale_ifl = true;
        }
        if let Some(out) = &self.out {
            rc.out = Some(out.clone());
        }
        Ok(rc)
    }
}

#[derive(Args, Debug)]
struct ClusterCmd {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
struct ClassifyCmd {
    /// Training CSV data file.
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// Test CSV data file.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// 0-based label column for both CSV files.
    #[arg(long)]
    label_col: Option<usize>,
    /// IDX files for the train/test split.
    #[arg(long)]
    train_idx_images: Option<PathBuf>,
    #[arg(long)]
    train_idx_labels: Option<PathBuf>,
    #[arg(long)]
    test_idx_images: Option<PathBuf>,
    #[arg(long)]
    test_idx_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScaleArg::None)]
    scale: ScaleArg,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
struct FeaturesCmd {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
struct ProjectCmd {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(cmd) => run_cluster(cmd),
        Command::Classify(cmd) => run_classify(cmd),
        Command::Features(cmd) => run_features(cmd),
        Command::Project(cmd) => run_project(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn require_source(rc: &mut RunConfig, args: &SourceArgs) -> Result<DataSource, Error> {
    if let Some(src) = args.to_source()? {
        rc.data = Some(src);
    }
    rc.data
        .clone()
        .ok_or_else(|| Error::Config("no input data given (--data or --idx-images)".into()))
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<14} {:<13} {:>8} {:>10}  raw", "method", "features", "mean", "variance");
    for cell in &report.cells {
        match (&cell.error, cell.mean) {
            (Some(err), _) => {
                println!("{:<14} {:<13} failed: {err}", cell.method, cell.feature_mode)
            }
            (None, Some(mean)) => {
                let raw: Vec<String> = cell.raw.iter().map(|v| format!("{v:.4}")).collect();
                println!(
                    "{:<14} {:<13} {:>8.4} {:>10.6}  [{}]",
                    cell.method,
                    cell.feature_mode,
                    mean,
                    cell.variance.unwrap_or(f64::NAN),
                    raw.join(", ")
                );
            }
            _ => println!("{:<14} {:<13} incomplete", cell.method, cell.feature_mode),
        }
    }
}

fn write_report(mut report: ExperimentReport, rc: &RunConfig, default_name: &str) -> Result<(), Error> {
    report.run_config = Some(rc.echo());
    let out = rc
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name));
    export_report(&report, &out)?;
    print_summary(&report);
    println!("report written to {}", out.display());
    Ok(())
}

fn run_cluster(cmd: ClusterCmd) -> Result<(), Error> {
    let mut rc = cmd.experiment.resolve(Task::Clustering)?;
    let source = require_source(&mut rc, &cmd.source)?;
    let data: Dataset<f64> = source.load()?;
    if data.labels.is_none() {
        return Err(Error::Config(
            "clustering accuracy needs labels; point --label-col at the class column".into(),
        ));
    }
    let report = run_clustering_experiment(&data, &rc.experiment)?;
    write_report(report, &rc, "clustering-report.json")
}

fn run_classify(cmd: ClassifyCmd) -> Result<(), Error> {
    let mut rc = cmd.experiment.resolve(Task::Classification)?;
    let train_src = match (&cmd.train_data, &cmd.train_idx_images, &cmd.train_idx_labels) {
        (Some(path), None, None) => Some(DataSource::Csv {
            path: path.clone(),
            label_column: cmd.label_col,
            scale: cmd.scale.into(),
        }),
        (None, Some(images), Some(labels)) => Some(DataSource::IdxPair {
            images: images.clone(),
            labels: labels.clone(),
            scale: cmd.scale.into(),
        }),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(
                "give --train-data or both --train-idx-images and --train-idx-labels".into(),
            ))
        }
    };
    if let Some(src) = train_src {
        rc.train_data = Some(src);
    }
    let test_src = match (&cmd.test_data, &cmd.test_idx_images, &cmd.test_idx_labels) {
        (Some(path), None, None) => Some(DataSource::Csv {
            path: path.clone(),
            label_column: cmd.label_col,
            scale: cmd.scale.into(),
        }),
        (None, Some(images), Some(labels)) => Some(DataSource::IdxPair {
            images: images.clone(),
            labels: labels.clone(),
            scale: cmd.scale.into(),
        }),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(
                "give --test-data or both --test-idx-images and --test-idx-labels".into(),
            ))
        }
    };
    if let Some(src) = test_src {
        rc.test_data = Some(src);
    }
    let train: Dataset<f64> = rc
        .train_data
        .clone()
        .ok_or_else(|| Error::Config("no training data given".into()))?
        .load()?;
    let test: Dataset<f64> = rc
        .test_data
        .clone()
        .ok_or_else(|| Error::Config("no test data given".into()))?
        .load()?;
    let report = run_classification_experiment(&train, &test, &rc.experiment)?;
    write_report(report, &rc, "classification-report.json")
}

fn run_features(cmd: FeaturesCmd) -> Result<(), Error> {
    let mut rc = cmd.experiment.resolve(Task::Clustering)?;
    let source = require_source(&mut rc, &cmd.source)?;
    let data: Dataset<f64> = source.load()?;
    let exp = &rc.experiment;
    let seed = derive_seed(exp.master_seed, 0x10);
    let table = match &data.labels {
        Some(labels) => {
            ifl_classification_train_features(
                &data.x,
                labels,
                exp.clusters,
                exp.folds,
                &exp.ifl_config::<f64>(),
                seed,
            )?
            .table
        }
        None => ifl_cluster_features(
            &data.x,
            exp.clusters,
            exp.folds,
            &exp.ifl_config::<f64>(),
            seed,
        )?,
    };
    for warning in &table.warnings {
        eprintln!("warning: {warning}");
    }
    let out = rc.out.clone().unwrap_or_else(|| PathBuf::from("features.csv"));
    export_features(&table, &out)?;
    write_meta(&rc, &out)?;
    println!(
        "{} rows x {} feature columns written to {}",
        table.n_rows(),
        table.width(),
        out.display()
    );
    Ok(())
}

fn run_project(cmd: ProjectCmd) -> Result<(), Error> {
    let mut rc = cmd.experiment.resolve(Task::Clustering)?;
    let source = require_source(&mut rc, &cmd.source)?;
    let data: Dataset<f64> = source.load()?;
    let exp = &rc.experiment;
    let seed = derive_seed(exp.master_seed, 0x10);
    let dims = Autoencoder::<f64>::full_dims(data.dim(), &exp.encoder_dims);
    let (ae, _) = train_autoencoder(&data.x, &dims, &exp.train_options::<f64>(), seed)?;
    let model = dec_fit(&ae, &data.x, exp.clusters, &exp.dec_config::<f64>(), seed)?;
    let z = model.encode(&data.x)?;
    let out = rc.out.clone().unwrap_or_else(|| PathBuf::from("projection.csv"));
    export_projection(&z, model.hard.assignment(), &out)?;
    write_meta(&rc, &out)?;
    println!(
        "{} projected points written to {}",
        z.rows(),
        out.display()
    );
    Ok(())
}

/// Sidecar with the resolved configuration, for exact replay of runs whose
/// main output is not a report.
fn write_meta(rc: &RunConfig, out: &std::path::Path) -> Result<(), Error> {
    let meta_path = out.with_extension("meta.json");
    let json = serde_json::to_string_pretty(&rc.echo()).expect("config serializes");
    std::fs::write(&meta_path, json + "\n")?;
    Ok(())
}
