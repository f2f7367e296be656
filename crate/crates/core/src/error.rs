use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value is out of its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation received no data.
    #[error("empty input: {0}")]
    Empty(String),

    /// A NaN or infinity showed up where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A cluster lost all of its soft mass during refinement.
    #[error("degenerate cluster: {0}")]
    DegenerateCluster(String),

    /// A text or binary input failed to parse; position included.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A data file is structurally broken (bad magic, truncation, ...).
    #[error("{path}: {msg}")]
    DataFormat { path: String, msg: String },

    /// An inner-fold run failed; the run index points at the culprit.
    #[error("inner-fold run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the inner-fold run it came from.
    pub fn in_run(self, run: usize) -> Self {
        Error::Run {
            run,
            source: Box::new(self),
        }
    }

    /// Process exit code class: 2 configuration, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_) | Error::Config(_) | Error::Empty(_) => 2,
            Error::Parse { .. } | Error::DataFormat { .. } | Error::Io(_) => 3,
            Error::NonFinite(_) | Error::DegenerateCluster(_) => 4,
            Error::Run { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
