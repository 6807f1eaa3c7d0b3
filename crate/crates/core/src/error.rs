// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the core engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spin index {index} out of range for a {n}-spin system")]
    SpinIndex { index: usize, n: usize },

    #[error("unsupported spin count {0} (supported: 1..=6)")]
    SpinCount(usize),

    #[error("invalid spin system: {0}")]
    SpinSystem(String),

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (||U'U - 1||_F = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("eigendecomposition did not converge")]
    Eigen,

    #[error("invalid pulse sequence: {0}")]
    Pulse(String),

    #[error("invalid RF inhomogeneity distribution: {0}")]
    Rfi(String),

    #[error("invalid control task: {0}")]
    Task(String),

    #[error("zero-norm operator in {0}")]
    ZeroNorm(&'static str),

    #[error("nonpositive temperature {0}")]
    Temperature(f64),

    #[error("invalid optimizer configuration: {0}")]
    Config(String),

    #[error("CPMG layout: {0}")]
    Cpmg(String),

    #[error("invalid noise model: {0}")]
    Noise(String),

    #[error("envelope does not decay (T2 above {cap:.3e} s)")]
    NonDecaying { cap: f64 },

    #[error("decay fit failed: {0}")]
    Fit(String),

    #[error("output error: {0}")]
    Io(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
