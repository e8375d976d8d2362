use thiserror::Error;

use crate::netmodel::Topology;

/// Errors raised by model construction, simulation, optimization and
/// identification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("invalid size {n} for a {topology:?} (chains need n >= 2, rings n >= 3)")]
    InvalidSize { topology: Topology, n: usize },

    #[error("coupling must be finite and strictly positive, got {0}")]
    InvalidCoupling(f64),

    #[error("anisotropy must be finite and non-negative, got {0}")]
    InvalidAnisotropy(f64),

    #[error("full Hilbert space for {n} spins exceeds the limit of {max} spins")]
    TooLarge { n: usize, max: usize },

    #[error("eigendecomposition did not converge")]
    DecompositionFailure,

    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid scan grid: step {step} with horizon {horizon}")]
    InvalidGrid { step: f64, horizon: f64 },

    #[error("horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),

    #[error("segment {index} has negative or non-finite duration {value}")]
    NegativeDuration { index: usize, value: f64 },

    #[error("Lie closure exceeded {max_dim} dimensions; rank tolerance is too small")]
    DimensionOverflow { max_dim: usize },

    #[error("invalid domain: {0}")]
    DomainError(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl SpinError {
    /// Validation errors are caused by bad input; everything else is a
    /// failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            SpinError::DecompositionFailure
                | SpinError::DimensionOverflow { .. }
                | SpinError::Experiment(_)
                | SpinError::Io(_)
        )
    }
}

impl From<std::io::Error> for SpinError {
    fn from(err: std::io::Error) -> Self {
        SpinError::Io(err.to_string())
    }
}

impl From<csv::Error> for SpinError {
    fn from(err: csv::Error) -> Self {
        SpinError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpinError>;
