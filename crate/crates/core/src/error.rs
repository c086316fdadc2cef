use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while evaluating a finite-sum objective.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("index set is empty")]
    EmptySubset,
    #[error("component index {index} out of range for {n} components")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("point has dimension {got}, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// Errors raised while reading or transforming datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("dataset is empty")]
    Empty,
    #[error("labels without a mapping: {0:?}")]
    UnmappedLabels(Vec<f64>),
    #[error("feature index {index} exceeds the declared dimension {dim}")]
    DimensionOverflow { index: usize, dim: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Invalid optimizer or experiment configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Errors raised while reading or writing trace files.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{file}: schema mismatch: {message}")]
    Schema { file: String, message: String },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors that stop an optimizer before it can produce a trace.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}
