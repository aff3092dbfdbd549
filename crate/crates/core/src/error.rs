use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: duplicate (grader, response) pair ({grader}, {response}) in dataset {dataset}")]
    DuplicatePair {
        row: usize,
        dataset: String,
        grader: String,
        response: String,
    },

    #[error("incomplete design: grader {grader} has no prediction for response {response}")]
    IncompleteDesign { grader: String, response: String },

    #[error("response {response} carries conflicting gold labels")]
    ConflictingGold { response: String },

    #[error("response {response} is assigned to more than one question")]
    ConflictingQuestion { response: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("duplicate key {key} in {source_name}")]
    DuplicateKey { key: String, source_name: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
