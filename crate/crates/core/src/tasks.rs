// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Named control targets.

use crate::error::{Error, Result};
use crate::linalg::{identity, Operator};
use crate::objective::ControlTask;
use crate::propagate::expm_hermitian;
use crate::spinsys::{dephasing_generator, ket0_projector, ket1_projector, pauli, spin_dot, spin_operator, Axis};

/// Thermal-equilibrium deviation `Σ_k I_kz`.
pub fn thermal_z(n: usize) -> Result<Operator> {
    dephasing_generator(n)
}

/// Long-lived singlet order `−I_0 · I_1`.
pub fn singlet_target(n: usize) -> Result<Operator> {
    if n < 2 {
        return Err(Error::Task("singlet order needs at least two spins".into()));
    }
    Ok(-spin_dot(n, 0, 1)?)
}

/// Alias used by tests: singlet order on a two-spin system.
pub fn singlet_order(n: usize) -> Result<Operator> {
    singlet_target(n)
}

/// `I_z1 + I_z2 → −I_1·I_2` on a two-spin system.
pub fn lls_transfer() -> Result<ControlTask> {
    ControlTask::state_transfer(thermal_z(2)?, singlet_target(2)?)
}

/// `|0><0| ⊗ 1 + |1><1| ⊗ σ_x`.
pub fn cnot() -> Operator {
    ket0_projector().kronecker(&identity(2)) + ket1_projector().kronecker(&pauli(Axis::X))
}

/// `exp(−iπ I_kx)`: a π rotation of spin `k` about x, identity elsewhere.
pub fn selective_pi(n: usize, k: usize) -> Result<Operator> {
    expm_hermitian(&spin_operator(n, k, Axis::X)?, std::f64::consts::PI)
}
