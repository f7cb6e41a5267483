use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("unknown label column `{0}`")]
    UnknownLabelColumn(String),

    #[error("missing value `{token}` at row {row}, column {column} (missing values are rejected)")]
    MissingValue {
        token: String,
        row: usize,
        column: usize,
    },

    #[error("dataset has no feature attributes")]
    NoAttributes,

    #[error("records have different attribute counts ({left} vs {right})")]
    SchemaMismatch { left: usize, right: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("k = {k} is invalid: {reason}")]
    InvalidK { k: usize, reason: String },

    #[error("need {k} distinct records but only {available} exist")]
    NotEnoughDistinct { k: usize, available: usize },

    #[error("medoid index {index} is out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("medoid index {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("assignment has {found} entries but the dataset has {expected} records")]
    AssignmentLength { expected: usize, found: usize },

    #[error("dataset has no class labels")]
    MissingLabels,

    #[error("distance matrix needs {needed} bytes, budget is {budget}")]
    MemoryBudget { needed: usize, budget: usize },

    #[error(
        "exhaustive search over {n_distinct} distinct records exceeds the limit of {limit}; \
         pass the override to run it anyway"
    )]
    InstanceTooLarge { n_distinct: usize, limit: usize },

    #[error("instance too large for brute force: {0}")]
    OracleTooLarge(String),

    #[error("k-modes objective increased from {previous} to {current} at iteration {iteration}")]
    ObjectiveIncreased {
        iteration: usize,
        previous: u64,
        current: u64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
