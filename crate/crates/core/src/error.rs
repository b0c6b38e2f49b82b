use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("kernel support must be positive, got {0}")]
    InvalidSupport(f64),
    #[error("unknown kernel `{0}` (expected `gaussian` or `epanechnikov`)")]
    UnknownKernel(String),
    #[error("kernel `{name}` is not a symmetric probability density: {reason}")]
    NotADensity { name: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("degenerate denominator at n = {n}: the observed prefix has no variation")]
    DegenerateDenominator { n: usize },
    #[error("lag m = {m} is not below n = {n}")]
    InvalidLag { m: usize, n: usize },
    #[error("index n = {n} outside 1..={len}")]
    IndexOutOfRange { n: usize, len: usize },
    #[error("window already holds the horizon N = {0} observations")]
    HorizonExceeded(usize),
    #[error("{mode} residuals need at least {needed} observations, got {got}")]
    InsufficientData {
        mode: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("non-finite observation {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("invalid monitor configuration: {0}")]
    Config(String),
    #[error("source exhausted after {got} observations; monitoring starts at k = {start}")]
    SourceExhausted { got: usize, start: usize },
    #[error(transparent)]
    Stat(#[from] StatError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("expected a {expected} path, got {got}")]
    WrongTag { expected: String, got: String },
    #[error("path grids differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("degenerate denominator in the limit functional at s = {s}")]
    DegenerateDenominator { s: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DgpError {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no cached control limit for {key}; run `calibrate` first, e.g. `{hint}`")]
    MissingCalibration { key: String, hint: String },
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: no observations")]
    EmptyFile(PathBuf),
    #[error("{path}: corrupted cache row {row}: {message}")]
    CorruptCache {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Limit(#[from] LimitError),
}
