use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("required column `{0}` is missing from the header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` as a timestamp")]
    UnparsableTimestamp { row: usize, value: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    UnparsableNumber { row: usize, column: String, value: String },
    #[error("case `{case}`: trace attribute `{column}` takes more than one value")]
    InconsistentTraceAttribute { case: String, column: String },
    #[error("log contains no data rows")]
    EmptyLog,
    #[error("split ratios must be positive and sum to 1")]
    InvalidRatios,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("activity `{0}` cannot reach the end of the process")]
    UnreachableEnd(String),
    #[error("invalid transition probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
    #[error("trace generation failed: {0}")]
    GenerationFailed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot parse process spec: {0}")]
    Json(#[from] serde_json::Error),
}
