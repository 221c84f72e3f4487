//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` required by the schema is missing from the input")]
    MissingColumn(String),

    #[error("row {row}: cannot parse `{value}` in column `{column}` as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: label `{value}` is not binary (expected 0 or 1)")]
    InvalidLabel { row: usize, value: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("sample size {requested} exceeds dataset size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "covariance matrix is singular after regularization; \
         increase the pseudocount alpha or reduce the bin count"
    )]
    SingularCovariance,

    #[error("dataset already carries a `{0}` column")]
    AlreadyStacked(String),

    #[error("benign validation subset is empty; thresholds cannot be computed")]
    EmptyBenignValidation,

    #[error("attack validation subset is empty; use the benign-only detection mode instead")]
    EmptyAttackValidation,

    #[error("dual-threshold classification requires an attack threshold")]
    MissingAttackThreshold,

    #[error("AUC is undefined when only one class is present")]
    SingleClassAuc,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parameter vector length {got} does not match manifest length {expected}")]
    BadParameterLength { expected: usize, got: usize },

    #[error("client `{client}` parameter manifest does not match the server manifest")]
    ManifestMismatch { client: String },

    #[error("corrupt {what} file: {reason}")]
    CorruptFile { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
