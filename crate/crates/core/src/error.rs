use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-numeric value {value:?} at (row {row}, col {col})")]
    NonNumeric {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("negative discharge at (row {row}, col {col})")]
    NegativeDischarge { row: usize, col: usize },

    #[error("duplicate gauge id {0:?}")]
    DuplicateGauge(String),

    #[error("missing value at (row {row}, col {col})")]
    MissingValue { row: usize, col: usize },

    #[error("constant column for gauge {0:?}")]
    ConstantColumn(String),

    #[error("dates not consecutive between {prev} and {next}")]
    DateGap { prev: String, next: String },

    #[error("dates not strictly increasing between {prev} and {next}")]
    DatesNotIncreasing { prev: String, next: String },

    #[error("zero-variance column {0}")]
    ZeroVariance(usize),

    #[error("overflow in inverse transform at (row {row}, col {col})")]
    Overflow { row: usize, col: usize },

    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("non-positive diagonal entry at {0}")]
    NonPositiveDiagonal(usize),

    #[error("solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("unknown gauge id {0:?}")]
    UnknownGauge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constant series: {0}")]
    ConstantSeries(&'static str),

    #[error("target {0} has no donors")]
    IsolatedTarget(usize),

    #[error("rank-deficient design for target {target} with donors {donors:?}")]
    RankDeficient { target: usize, donors: Vec<usize> },

    #[error("no evaluable targets: every gauge is isolated")]
    NoTargets,

    #[error("empty pareto front")]
    EmptyFront,

    #[error("no front point with at most {0} edges")]
    NoFrontPoint(usize),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("http error: {0}")]
    Http(String),

    #[error("date ranges differ between sites: {0}")]
    MisalignedDates(String),

    #[error("no data returned for site {0}")]
    NoData(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage and input problems, 1 for failures
    /// during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::MalformedHeader(_)
            | Error::Parse { .. }
            | Error::NonNumeric { .. }
            | Error::NegativeDischarge { .. }
            | Error::DuplicateGauge(_)
            | Error::MissingValue { .. }
            | Error::ConstantColumn(_)
            | Error::DateGap { .. }
            | Error::DatesNotIncreasing { .. }
            | Error::UnknownGauge(_)
            | Error::InvalidParameter(_)
            | Error::MissingInput(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            _ => 1,
        }
    }
}
