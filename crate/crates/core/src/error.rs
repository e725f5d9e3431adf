use thiserror::Error;

use crate::cones::RegionViolation;
use crate::curvop::CurvatureOperator;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient dimension n = {0} is outside the supported range 3..=10")]
    DimensionOutOfRange(usize),

    #[error("index {index} out of range (must be < {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("indices must be strictly increasing, got {0:?}")]
    IndexOrder(Vec<usize>),

    #[error("operator is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("parameters ({lambda1}, {lambda2}) outside the admissible region: {violation}")]
    OutsideRegion {
        lambda1: f64,
        lambda2: f64,
        violation: RegionViolation,
    },

    #[error("spectrum too short: need at least {needed} eigenvalues, got {found}")]
    SpectrumTooShort { needed: usize, found: usize },

    #[error("rejection sampler exhausted after {0} attempts")]
    SamplerExhausted(usize),

    #[error("parameter grid is empty")]
    EmptyGrid,

    #[error("parameter grid does not contain (1, 0)")]
    GridMissingCorner,

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state at t = {time}")]
    NonFinite {
        time: f64,
        last_state: Box<CurvatureOperator>,
    },

    #[error("all samples were skipped: {0}")]
    AllSkipped(String),

    #[error("model spec: {0}")]
    Model(String),
}
