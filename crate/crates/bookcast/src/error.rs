//! Crate-wide error type.
//!
//! Every fallible operation returns [`enum@Error`]; data errors carry row/column
//! coordinates so callers (and the CLI) can point at the offending cell.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// CSV header or column set does not match the declared schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A numeric column contained a token that does not parse as a number.
    #[error("row {row}, column '{column}': expected a number, found '{token}'")]
    TypeError {
        row: usize,
        column: String,
        token: String,
    },

    /// The input file has no data rows (or no header at all).
    #[error("empty file: {0}")]
    EmptyFile(String),

    /// Imputation requested on a column with no observed values.
    #[error("column '{0}' is entirely missing; cannot impute")]
    AllMissingColumn(String),

    /// A summary grouping column is not present in the schema.
    #[error("grouping column '{0}' is not declared in the schema")]
    MissingGroupColumn(String),

    /// Marginal-rate calibration could not reach the requested targets.
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    /// Partitioning needs at least two rows.
    #[error("too few rows: have {0}, need at least 2")]
    TooFewRows(usize),

    /// Stratified partitioning with an absent target class.
    #[error("stratified split impossible: class '{0}' has no rows")]
    EmptyClass(String),

    /// Rebalancing or AUC computation with only one target class present.
    #[error("target has a single class")]
    SingleClass,

    /// Training data whose target column has a single class.
    #[error("degenerate target: all training rows share one class")]
    DegenerateTarget,

    /// Score and label vectors of different lengths.
    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),

    /// A parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// Stage-2 training requested but no rows have show flag = 1.
    #[error("no rows with show flag = 1; cannot train the booked stage")]
    EmptyShownSubset,

    /// A model bundle directory is missing pieces or fails validation.
    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    /// Flat key/value config file error, with the 1-based line number.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// LR/MLP training on data that still contains missing values.
    #[error("column '{0}' contains missing values; impute first or use a tree learner")]
    MissingValues(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
