use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: row {row}: {message}")]
    Validation {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("feature {index} has zero variance on the training rows")]
    ZeroVariance { index: usize },

    #[error("relative error undefined: target {index} is zero")]
    ZeroTarget { index: usize },

    #[error("kernel matrix not positive definite after jitter up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("SVR solver did not converge in {iterations} iterations (max KKT violation {violation:e})")]
    NoConvergence { iterations: usize, violation: f64 },

    #[error("no feasible row in dataset (best constraint margin seen: {best_margin_db:.3} dB on {metric})")]
    NoFeasibleRow { metric: String, best_margin_db: f64 },

    #[error("simulation failed for {config}: {message}")]
    Simulation { config: String, message: String },

    #[error("missing emulator for metric {0}")]
    MissingModel(String),

    #[error("missing input file {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
