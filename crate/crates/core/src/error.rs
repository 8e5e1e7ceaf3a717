use thiserror::Error;

/// Errors produced by the `noisynb` library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("label {label} at row {row} is outside 1..={k}")]
    InvalidLabel { row: usize, label: usize, k: usize },

    #[error("feature value {value} at row {row}, column {col} is not 0 or 1")]
    InvalidFeature { row: usize, col: usize, value: u8 },

    #[error("continuous feature at row {row}, column {col} is not finite")]
    NonFiniteFeature { row: usize, col: usize },

    #[error(
        "estimated p[{feature}][{class}] = {value} is on the boundary of (0,1); \
         use a positive smoothing constant"
    )]
    BoundaryProbability {
        feature: usize,
        class: usize,
        value: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("row {row} has zero probability under every latent class")]
    DegenerateRow { row: usize },

    #[error("AUC is undefined: {0}")]
    UndefinedAuc(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
