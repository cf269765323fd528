use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid column map: {0}")]
    ColumnMap(String),

    #[error("no complete 96-slot days found in input")]
    NoCompleteDays,

    #[error("invalid household day {date}: {reason}")]
    InvalidDay { date: NaiveDate, reason: String },

    #[error("duplicate date in dataset: {0}")]
    DuplicateDate(NaiveDate),

    #[error("invalid synthesis profile: {0}")]
    InvalidProfile(String),

    #[error("invalid tariff schedule: {0}")]
    InvalidTariff(String),

    #[error("invalid battery spec: {0}")]
    InvalidBattery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset has no {0} days")]
    EmptyDataset(&'static str),

    #[error("no positive slot costs; cost quantiles are undefined")]
    NoPositiveCosts,

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("non-finite network input: {0:?}")]
    NonFiniteInput(Vec<f64>),

    #[error("training diverged at gradient step {step}: loss = {loss}")]
    Divergence { step: u64, loss: f64 },

    #[error("network shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("horizon {horizon} exceeds the exhaustive-search limit of {limit}")]
    HorizonTooLarge { horizon: usize, limit: usize },

    #[error("day {0} not found in dataset")]
    UnknownDay(NaiveDate),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
