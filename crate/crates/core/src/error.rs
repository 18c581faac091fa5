//! Shared error type.

use thiserror::Error;

use crate::gindikin::Verdict;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {dev} exceeds tolerance {tol}")]
    NotSymmetric { i: usize, j: usize, dev: f64, tol: f64 },

    #[error("matrix is not positive semi-definite: min eigenvalue {min_eig} below -{tol}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPd(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid shape parameter: {0}")]
    InvalidShape(String),

    #[error("transform matrix is singular")]
    SingularTransform,

    #[error("rank {rank} exceeds the available number of factors {n}")]
    RankTooHigh { rank: usize, n: usize },

    #[error("shape too small for a central sampler: 2*beta = {two_beta} < p - 1 = {min}")]
    ShapeTooSmall { two_beta: f64, min: f64 },

    #[error("no exact convolution split exists for these parameters: {0}")]
    InfeasibleSplit(String),

    #[error("parameters are inadmissible: {}", .0.detail)]
    InadmissibleParams(Box<Verdict>),

    #[error("Laplace argument outside the transform domain: min eigenvalue of I + Sigma*u is {min_eig}")]
    DomainError { min_eig: f64 },

    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("invalid moment inputs: {0}")]
    InvalidMoments(String),

    #[error("index or order out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
