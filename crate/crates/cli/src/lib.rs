// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Library half of the `spinctl` binary: config parsing, shape files and
//! the command implementations, exposed for integration tests.

pub mod commands;
pub mod config;
pub mod shape;

pub use commands::{CliError, OptimizeSummary};
pub use config::{ConfigError, RunConfig};
pub use shape::{export_pulse, import_pulse, ShapeError};
