use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit out of range: {0}")]
    QubitOutOfRange(usize),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(f64),
    #[error("unphysical T2: t2 = {t2} exceeds 2*t1 = {}", 2.0 * t1)]
    UnphysicalT2 { t1: f64, t2: f64 },
    #[error("invalid duration or relaxation time: {0}")]
    InvalidTime(String),
    #[error("non-CPTP channel: completeness deviation {0:e}")]
    NonCptp(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("empty sample: shots must be at least 1")]
    EmptySample,
    #[error("invalid step: {0} (expected 1..=9)")]
    InvalidStep(usize),
    #[error("unknown decomposition style: {0}")]
    UnknownStyle(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("empty machine list")]
    EmptyMachines,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed dataset file {path}: line {line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),
    #[error("unknown machine: {0}")]
    UnknownMachine(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("empty selection: {0}")]
    EmptySelection(String),
    #[error("missing second epoch: {0}")]
    MissingSecondEpoch(String),
    #[error("insufficient runs: need {needed}, found {found}")]
    InsufficientRuns { needed: usize, found: usize },
    #[error("wrong machine count: need {expected}, found {found}")]
    MachineCount { expected: usize, found: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (CLI exit code 1) rather than
    /// internal failures (exit code 2).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
