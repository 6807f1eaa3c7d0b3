// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin operators and rotating-frame Hamiltonians for a homonuclear
//! `n`-spin system under the weak-coupling approximation.
//!
//! Basis ordering: spin 0 is the leftmost tensor factor and `|0>` is the
//! `+z` eigenstate (`I_z = +1/2`). Spin indices are zero-based.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_real_diag, identity, kron_all, Operator, ONE, ZERO};

pub const MAX_SPINS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Transverse axes that carry RF control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlAxis {
    X,
    Y,
}

impl From<ControlAxis> for Axis {
    fn from(a: ControlAxis) -> Self {
        match a {
            ControlAxis::X => Axis::X,
            ControlAxis::Y => Axis::Y,
        }
    }
}

/// Offsets and scalar couplings of a single-species spin system.
///
/// Offsets are angular frequencies (rad/s); couplings are in Hz and only
/// multiplied by `2π` inside the coupling term of the drift Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    offsets: Vec<f64>,
    couplings: Vec<Vec<f64>>,
}

impl SpinSystem {
    /// Builds a system from offsets in rad/s and a full symmetric coupling
    /// matrix in Hz.
    pub fn new(offsets_rad_s: Vec<f64>, couplings_hz: Vec<Vec<f64>>) -> Result<Self> {
        let n = offsets_rad_s.len();
        if n == 0 || n > MAX_SPINS {
            return Err(Error::SpinCount(n));
        }
        if couplings_hz.len() != n || couplings_hz.iter().any(|row| row.len() != n) {
            return Err(Error::SpinSystem(format!(
                "coupling matrix must be {n}x{n}"
            )));
        }
        if offsets_rad_s.iter().chain(couplings_hz.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::SpinSystem("non-finite offset or coupling".into()));
        }
        for k in 0..n {
            if couplings_hz[k][k] != 0.0 {
                return Err(Error::SpinSystem(format!(
                    "coupling diagonal entry ({k},{k}) must be zero"
                )));
            }
            for l in (k + 1)..n {
                if couplings_hz[k][l] != couplings_hz[l][k] {
                    return Err(Error::SpinSystem(format!(
                        "coupling matrix not symmetric at ({k},{l})"
                    )));
                }
            }
        }
        Ok(Self {
            offsets: offsets_rad_s,
            couplings: couplings_hz,
        })
    }

    /// Offsets in Hz; couplings given as the strict upper triangle in
    /// row-major pair order `(0,1), (0,2), …, (1,2), …`.
    pub fn from_hz(offsets_hz: &[f64], upper_couplings_hz: &[f64]) -> Result<Self> {
        let n = offsets_hz.len();
        let expected = n * n.saturating_sub(1) / 2;
        if upper_couplings_hz.len() != expected {
            return Err(Error::SpinSystem(format!(
                "expected {expected} upper-triangle couplings for {n} spins, got {}",
                upper_couplings_hz.len()
            )));
        }
        let mut j = vec![vec![0.0; n]; n];
        let mut it = upper_couplings_hz.iter();
        for k in 0..n {
            for l in (k + 1)..n {
                let v = *it.next().expect("length checked");
                j[k][l] = v;
                j[l][k] = v;
            }
        }
        Self::new(offsets_hz.iter().map(|v| 2.0 * PI * v).collect(), j)
    }

    /// Uncoupled, on-resonance spins.
    pub fn free(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n], vec![vec![0.0; n]; n])
    }

    pub fn n_spins(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::SpinCount(n));
    }
    Ok(())
}

/// `σ_α / 2`.
fn half_pauli(axis: Axis) -> Operator {
    let h = 0.5;
    match axis {
        Axis::X => Operator::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(h, 0.0), Complex64::new(h, 0.0), ZERO],
        ),
        Axis::Y => Operator::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(0.0, -h), Complex64::new(0.0, h), ZERO],
        ),
        Axis::Z => Operator::from_row_slice(
            2,
            2,
            &[Complex64::new(h, 0.0), ZERO, ZERO, Complex64::new(-h, 0.0)],
        ),
    }
}

/// `I_kα = 1 ⊗ … ⊗ σ_α/2 ⊗ … ⊗ 1` with the Pauli factor at slot `k`.
pub fn spin_operator(n: usize, k: usize, axis: Axis) -> Result<Operator> {
    check_n(n)?;
    if k >= n {
        return Err(Error::SpinIndex { index: k, n });
    }
    let factors: Vec<Operator> = (0..n)
        .map(|slot| if slot == k { half_pauli(axis) } else { identity(2) })
        .collect();
    Ok(kron_all(&factors))
}

fn collective(n: usize, axis: Axis) -> Result<Operator> {
    check_n(n)?;
    let dim = 1 << n;
    let mut acc = Operator::zeros(dim, dim);
    for k in 0..n {
        acc += spin_operator(n, k, axis)?;
    }
    Ok(acc)
}

/// `H_α = Σ_k I_kα` for a transverse axis.
pub fn collective_control(n: usize, axis: ControlAxis) -> Result<Operator> {
    collective(n, axis.into())
}

/// `I_z` eigenvalue `±1/2` of spin `k` in computational basis state `state`.
fn z_eigenvalue(n: usize, state: usize, k: usize) -> f64 {
    if (state >> (n - 1 - k)) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Diagonal of `H_z = Σ_k I_kz`.
pub fn hz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|s| (0..n).map(|k| z_eigenvalue(n, s, k)).sum())
        .collect()
}

/// Diagonal of the drift Hamiltonian
/// `H_0 = −Σ_k Ω_k I_kz + 2π Σ_{k<l} J_kl I_kz I_lz`.
pub fn drift_diagonal(sys: &SpinSystem) -> Vec<f64> {
    let n = sys.n_spins();
    (0..sys.dim())
        .map(|s| {
            let m: Vec<f64> = (0..n).map(|k| z_eigenvalue(n, s, k)).collect();
            let mut e = 0.0;
            for k in 0..n {
                e -= sys.offsets[k] * m[k];
                for l in (k + 1)..n {
                    e += 2.0 * PI * sys.couplings[k][l] * m[k] * m[l];
                }
            }
            e
        })
        .collect()
}

pub fn drift_hamiltonian(sys: &SpinSystem) -> Operator {
    from_real_diag(&drift_diagonal(sys))
}

/// `H_z = Σ_k I_kz`, the generator of collective dephasing.
pub fn dephasing_generator(n: usize) -> Result<Operator> {
    check_n(n)?;
    Ok(from_real_diag(&hz_diagonal(n)))
}

/// `I_k · I_l = Σ_α I_kα I_lα`.
pub fn spin_dot(n: usize, k: usize, l: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(1 << n, 1 << n);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        acc += spin_operator(n, k, axis)? * spin_operator(n, l, axis)?;
    }
    Ok(acc)
}

/// Projector-free convenience: `|0><0|` on a single qubit.
pub(crate) fn ket0_projector() -> Operator {
    Operator::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])
}

pub(crate) fn ket1_projector() -> Operator {
    Operator::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE])
}

pub(crate) fn pauli(axis: Axis) -> Operator {
    half_pauli(axis) * Complex64::new(2.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius_norm, hermitian_spectrum_desc, is_hermitian};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_spin_z_is_half_pauli() {
        let iz = spin_operator(1, 0, Axis::Z).unwrap();
        assert_eq!(iz, from_real_diag(&[0.5, -0.5]));
    }

    #[test]
    fn second_spin_x_is_identity_kron_sigma_x() {
        let op = spin_operator(2, 1, Axis::X).unwrap();
        let expected = identity(2).kronecker(&half_pauli(Axis::X));
        assert_eq!(op, expected);
        // entrywise: |00>↔|01> and |10>↔|11>
        assert_eq!(op[(0, 1)], c(0.5));
        assert_eq!(op[(2, 3)], c(0.5));
        assert_eq!(op[(0, 2)], c(0.0));
    }

    #[test]
    fn trace_of_squared_spin_operator() {
        let iy = spin_operator(3, 1, Axis::Y).unwrap();
        let tr = (&iy * &iy).trace();
        assert!((tr - c(2.0)).norm() < 1e-14);
        for n in 1..=4 {
            for k in 0..n {
                for axis in [Axis::X, Axis::Y, Axis::Z] {
                    let op = spin_operator(n, k, axis).unwrap();
                    assert!(is_hermitian(&op, 1e-12));
                    assert!(op.trace().norm() < 1e-14);
                    let t2 = (&op * &op).trace();
                    assert!((t2 - c((1 << n) as f64 / 4.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spin_index_out_of_range() {
        assert_eq!(
            spin_operator(2, 2, Axis::X),
            Err(Error::SpinIndex { index: 2, n: 2 })
        );
        assert!(matches!(spin_operator(7, 0, Axis::X), Err(Error::SpinCount(7))));
    }

    #[test]
    fn collective_controls_obey_angular_momentum_algebra() {
        let hx1 = collective_control(1, ControlAxis::X).unwrap();
        assert_eq!(hx1, half_pauli(Axis::X));

        let hx = collective_control(2, ControlAxis::X).unwrap();
        let direct = spin_operator(2, 0, Axis::X).unwrap() + spin_operator(2, 1, Axis::X).unwrap();
        assert!(frobenius_norm(&(&hx - &direct)) < 1e-15);

        let hy = collective_control(2, ControlAxis::Y).unwrap();
        let hz = dephasing_generator(2).unwrap();
        let lhs = commutator(&hx, &hy);
        let rhs = hz * Complex64::new(0.0, 1.0);
        assert!(frobenius_norm(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn distinct_spins_commute() {
        let axes = [Axis::X, Axis::Y, Axis::Z];
        for n in 2..=3 {
            for k in 0..n {
                for l in 0..n {
                    if k == l {
                        continue;
                    }
                    for a in axes {
                        for b in axes {
                            let ka = spin_operator(n, k, a).unwrap();
                            let lb = spin_operator(n, l, b).unwrap();
                            assert!(frobenius_norm(&commutator(&ka, &lb)) < 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_drift_for_free_system() {
        let sys = SpinSystem::free(3).unwrap();
        assert!(frobenius_norm(&drift_hamiltonian(&sys)) == 0.0);
    }

    #[test]
    fn single_spin_drift() {
        let omega = 2.0 * PI * 37.0;
        let sys = SpinSystem::new(vec![omega], vec![vec![0.0]]).unwrap();
        assert_eq!(drift_diagonal(&sys), vec![-omega / 2.0, omega / 2.0]);
    }

    #[test]
    fn two_spin_drift_matches_scalar_oracle() {
        // Independent scalar evaluation: state |b1 b2>, m = ±1/2.
        let (nu2, j) = (127.4, 8.8);
        let sys = SpinSystem::from_hz(&[0.0, nu2], &[j]).unwrap();
        let h0 = drift_hamiltonian(&sys);
        let om2 = 2.0 * PI * nu2;
        let expected = [
            // |00>: m=(+,+)
            -om2 * 0.5 + PI * j / 2.0,
            // |01>: m=(+,-)
            om2 * 0.5 - PI * j / 2.0,
            // |10>: m=(-,+)
            -om2 * 0.5 - PI * j / 2.0,
            // |11>: m=(-,-)
            om2 * 0.5 + PI * j / 2.0,
        ];
        for (i, e) in expected.iter().enumerate() {
            assert!((h0[(i, i)].re - e).abs() < 1e-9, "state {i}");
        }
        assert!(is_hermitian(&h0, 1e-12));
        let hz = dephasing_generator(2).unwrap();
        assert!(frobenius_norm(&commutator(&h0, &hz)) < 1e-12);
    }

    #[test]
    fn dephasing_generator_spectra() {
        assert_eq!(dephasing_generator(1).unwrap(), from_real_diag(&[0.5, -0.5]));
        assert_eq!(
            dephasing_generator(2).unwrap(),
            from_real_diag(&[1.0, 0.0, 0.0, -1.0])
        );
        let spectrum = hermitian_spectrum_desc(&dephasing_generator(3).unwrap());
        let expected = [1.5, 0.5, 0.5, 0.5, -0.5, -0.5, -0.5, -1.5];
        for (a, b) in spectrum.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_couplings() {
        let err = SpinSystem::new(vec![0.0, 0.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(err, Err(Error::SpinSystem(_))));
        let err = SpinSystem::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(err, Err(Error::SpinSystem(_))));
        assert!(SpinSystem::from_hz(&[0.0, 1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn singlet_operator_spectrum() {
        let dot = spin_dot(2, 0, 1).unwrap();
        let ev = hermitian_spectrum_desc(&dot);
        // triplet 1/4 (x3), singlet -3/4
        let expected = [0.25, 0.25, 0.25, -0.75];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
