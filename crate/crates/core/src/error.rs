use thiserror::Error;

/// Errors shared across the discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("library size {size} exceeds cap {cap} (problem infeasible at this order)")]
    LibraryTooLarge { size: usize, cap: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("non-uniform sampling: {0}")]
    NonUniformSampling(String),

    #[error("not enough samples: need {need}, have {have}")]
    NotEnoughSamples { need: usize, have: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("partial observation: {0} (all state variables must be measured)")]
    PartialObservation(String),

    #[error("recovered model is not sparse: row {row} support {support} exceeds {cap}")]
    NotSparse {
        row: usize,
        support: usize,
        cap: usize,
    },

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    #[error("weight order {order} too low for derivative order {needed}")]
    WeightOrderTooLow { order: usize, needed: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
