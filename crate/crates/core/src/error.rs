use thiserror::Error;

pub type Result<T> = std::result::Result<T, FkmError>;

#[derive(Debug, Error)]
pub enum FkmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at line {line}: column `{column}` value `{value}` is not a number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid dataset: {}", .0.join("; "))]
    InvalidDataset(Vec<String>),

    #[error("degenerate time domain [{lo}, {hi}]")]
    DegenerateDomain { lo: f64, hi: f64 },

    #[error("time {t} outside domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cluster {0} has no observations")]
    EmptyCluster(usize),

    #[error("need at least {needed} subjects, have {have}")]
    TooFewSubjects { needed: usize, have: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl FkmError {
    /// Short stable identifier for machine-readable error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            FkmError::Io(_) => "io",
            FkmError::Csv(_) => "csv",
            FkmError::MissingColumn(_) => "schema",
            FkmError::Parse { .. } => "parse",
            FkmError::EmptyData(_) => "empty-data",
            FkmError::InvalidDataset(_) => "invalid-dataset",
            FkmError::DegenerateDomain { .. } => "degenerate-domain",
            FkmError::OutOfDomain { .. } => "domain",
            FkmError::InvalidBasis(_) => "invalid-basis",
            FkmError::Unsupported(_) => "unsupported",
            FkmError::DimensionMismatch(_) => "dimension-mismatch",
            FkmError::InvalidConfig(_) => "invalid-config",
            FkmError::EmptyCluster(_) => "empty-cluster",
            FkmError::TooFewSubjects { .. } => "too-few-subjects",
            FkmError::Numeric(_) => "numeric",
        }
    }
}
