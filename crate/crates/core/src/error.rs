use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("negative density at cell {index}: {value}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("negative distribution value at cell {index}: {value}")]
    NegativeDistribution { index: usize, value: f64 },

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error(
        "weight overflow at x={x:?}, xi={xi:?} (a*|xi|^2 = {exponent:.3}): \
         reduce the velocity extent or the Gaussian rate a"
    )]
    WeightOverflow { x: Vec<f64>, xi: Vec<f64>, exponent: f64 },

    #[error("time step {dt} violates the {constraint} constraint; required dt <= {required}")]
    CflViolation { dt: f64, required: f64, constraint: &'static str },

    #[error("characteristic integration produced a non-finite state; last valid s = {last_s}")]
    CharacteristicDiverged { last_s: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed series at row {row}: {msg}")]
    SeriesFormat { row: usize, msg: String },

    #[error("malformed snapshot: {0}")]
    SnapshotFormat(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("run aborted at step {step}; last valid snapshot written to {snapshot}")]
    RunAborted { step: usize, snapshot: PathBuf, #[source] source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
