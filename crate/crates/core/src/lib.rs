// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pulse engineering for small weakly coupled spin-1/2 systems: exact
//! propagation, GRAPE gradients, simulated-annealing hybrids and a
//! Monte-Carlo dephasing bench.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod anneal;
pub mod error;
pub mod hybrid;
pub mod linalg;
pub mod objective;
pub mod propagate;
pub mod simulate;
pub mod spinsys;
pub mod tasks;

pub use anneal::{sa_sweep, threshold, AnnealState, SweepOutcome};
pub use error::{Error, Result};
pub use hybrid::{
    cpmg_blocks, freeze_cpmg, optimize, optimize_observed, optimize_with, Algorithm, OptimizationResult, OptimizerConfig, StopReason,
    TracePoint,
};
pub use linalg::Operator;
pub use objective::{attainability_bound, ControlTask, GradientField, GradientMode, Objective};
pub use propagate::{NoiseTrajectory, PulseSequence, RfiDistribution};
pub use simulate::{
    BenchmarkResult, BenchmarkSpec, CpmgProtocol, NoiseKind, NoiseModel, RobustnessRow, SpectroscopyResult,
    SpectroscopyRow,
};
pub use spinsys::{Axis, ControlAxis, SpinSystem};
