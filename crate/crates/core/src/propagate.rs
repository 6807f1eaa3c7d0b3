// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant pulse sequences and their propagators.
//!
//! The sequence propagator is always the time-ordered product
//! `U = U_N ··· U_2 U_1`: segment 0 acts first.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_hermitian, ensure_same_dim, identity, Operator};
use crate::spinsys::{
    collective_control, dephasing_generator, drift_diagonal, drift_hamiltonian, hz_diagonal,
    ControlAxis, SpinSystem,
};

/// Tolerance for the Hermiticity check in [`expm_hermitian`], relative to
/// the largest entry.
const HERMITIAN_TOL: f64 = 1e-12;

/// N piecewise-constant segments of `(ω_x, ω_y)` in rad/s.
///
/// Frozen segments are never touched by optimizer updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    tau: f64,
    amps_x: Vec<f64>,
    amps_y: Vec<f64>,
    frozen: Vec<bool>,
}

impl PulseSequence {
    pub fn new(tau: f64, amps_x: Vec<f64>, amps_y: Vec<f64>) -> Result<Self> {
        let n = amps_x.len();
        Self::with_mask(tau, amps_x, amps_y, vec![false; n])
    }

    pub fn with_mask(
        tau: f64,
        amps_x: Vec<f64>,
        amps_y: Vec<f64>,
        frozen: Vec<bool>,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Pulse(format!("segment duration must be positive, got {tau}")));
        }
        let n = amps_x.len();
        if n == 0 {
            return Err(Error::Pulse("at least one segment required".into()));
        }
        if amps_y.len() != n || frozen.len() != n {
            return Err(Error::Pulse(format!(
                "length mismatch: x={n}, y={}, mask={}",
                amps_y.len(),
                frozen.len()
            )));
        }
        if amps_x.iter().chain(&amps_y).any(|a| !a.is_finite()) {
            return Err(Error::Pulse("non-finite amplitude".into()));
        }
        Ok(Self {
            tau,
            amps_x,
            amps_y,
            frozen,
        })
    }

    pub fn zeros(segments: usize, tau: f64) -> Result<Self> {
        Self::new(tau, vec![0.0; segments], vec![0.0; segments])
    }

    /// Independent uniform amplitudes in `[-max_amp, max_amp]` on both axes.
    pub fn random<R: Rng + ?Sized>(
        segments: usize,
        tau: f64,
        max_amp: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut draw = || -> Vec<f64> {
            (0..segments)
                .map(|_| if max_amp > 0.0 { rng.random_range(-max_amp..=max_amp) } else { 0.0 })
                .collect()
        };
        let x = draw();
        let y = draw();
        Self::new(tau, x, y)
    }

    /// Builds a sequence from polar `(amplitude, phase)` pairs.
    pub fn from_polar(tau: f64, amp: &[f64], phase: &[f64], frozen: Vec<bool>) -> Result<Self> {
        if amp.len() != phase.len() {
            return Err(Error::Pulse("amplitude/phase length mismatch".into()));
        }
        let x = amp.iter().zip(phase).map(|(a, p)| a * p.cos()).collect();
        let y = amp.iter().zip(phase).map(|(a, p)| a * p.sin()).collect();
        Self::with_mask(tau, x, y, frozen)
    }

    pub fn segments(&self) -> usize {
        self.amps_x.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn duration(&self) -> f64 {
        self.tau * self.segments() as f64
    }

    pub fn amps_x(&self) -> &[f64] {
        &self.amps_x
    }

    pub fn amps_y(&self) -> &[f64] {
        &self.amps_y
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, j: usize) -> bool {
        self.frozen[j]
    }

    pub fn amplitude(&self, j: usize) -> f64 {
        self.amps_x[j].hypot(self.amps_y[j])
    }

    pub fn phase(&self, j: usize) -> f64 {
        self.amps_y[j].atan2(self.amps_x[j])
    }

    pub fn max_amplitude(&self) -> f64 {
        (0..self.segments()).map(|j| self.amplitude(j)).fold(0.0, f64::max)
    }

    /// Sets a segment regardless of its mask. Optimizers go through
    /// [`PulseSequence::update_unfrozen`] instead.
    pub fn set_segment(&mut self, j: usize, wx: f64, wy: f64) {
        self.amps_x[j] = wx;
        self.amps_y[j] = wy;
    }

    pub fn set_frozen(&mut self, j: usize, frozen: bool) {
        self.frozen[j] = frozen;
    }

    /// Applies `f(j, ω_x, ω_y) -> (ω_x', ω_y')` to every unfrozen segment.
    pub fn update_unfrozen(&mut self, mut f: impl FnMut(usize, f64, f64) -> (f64, f64)) {
        for j in 0..self.segments() {
            if !self.frozen[j] {
                let (x, y) = f(j, self.amps_x[j], self.amps_y[j]);
                self.amps_x[j] = x;
                self.amps_y[j] = y;
            }
        }
    }

    pub fn unfrozen_count(&self) -> usize {
        self.frozen.iter().filter(|f| !**f).count()
    }
}

/// Discrete RF-inhomogeneity ensemble `{(r_m, p_m)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfiDistribution {
    scales: Vec<f64>,
    probs: Vec<f64>,
}

impl RfiDistribution {
    pub fn new(scales: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::Rfi("empty ensemble".into()));
        }
        if scales.len() != probs.len() {
            return Err(Error::Rfi(format!(
                "{} scales but {} probabilities",
                scales.len(),
                probs.len()
            )));
        }
        if scales.iter().any(|s| !s.is_finite()) {
            return Err(Error::Rfi("non-finite scale".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Rfi("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Rfi(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { scales, probs })
    }

    /// Perfectly homogeneous RF: `r = 1` with probability 1.
    pub fn homogeneous() -> Self {
        Self {
            scales: vec![1.0],
            probs: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn members(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.scales.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Per-segment dephasing offsets `η(j)` in Hz drawn from `[-ζ/2, ζ/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    etas: Vec<f64>,
    zeta: f64,
}

impl NoiseTrajectory {
    pub fn new(etas: Vec<f64>, zeta: f64) -> Result<Self> {
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return Err(Error::Noise(format!("noise range must be nonnegative, got {zeta}")));
        }
        let half = zeta / 2.0;
        if let Some(bad) = etas.iter().find(|e| !(e.abs() <= half)) {
            return Err(Error::Noise(format!("η = {bad} outside [-{half}, {half}]")));
        }
        Ok(Self { etas, zeta })
    }

    pub fn silent(segments: usize) -> Self {
        Self {
            etas: vec![0.0; segments],
            zeta: 0.0,
        }
    }

    /// I.i.d. uniform draws on `[-ζ/2, ζ/2]`.
    pub fn sample_uniform<R: Rng + ?Sized>(segments: usize, zeta: f64, rng: &mut R) -> Result<Self> {
        let half = zeta / 2.0;
        let etas = (0..segments)
            .map(|_| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 })
            .collect();
        Self::new(etas, zeta)
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }
}

/// `exp(−iτH)` through the eigendecomposition `H = VΛV†`.
pub fn expm_hermitian(h: &Operator, tau: f64) -> Result<Operator> {
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    ensure_hermitian(h, HERMITIAN_TOL * scale)?;
    // symmetrize to remove rounding-level anti-Hermitian residue
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen);
    }
    let v = &eig.eigenvectors;
    let phases = eig
        .eigenvalues
        .map(|l| Complex64::from_polar(1.0, -tau * l));
    let mut scaled = v.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    Ok(scaled * v.adjoint())
}

/// `H(j) = H_0 + r(ω_x(j) H_x + ω_y(j) H_y) [+ 2π η_j H_z]`, with `j`
/// zero-based.
pub fn segment_hamiltonian(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    j: usize,
    r: f64,
    eta_hz: Option<f64>,
) -> Result<Operator> {
    if j >= pulse.segments() {
        return Err(Error::Pulse(format!(
            "segment {j} out of range for {} segments",
            pulse.segments()
        )));
    }
    let n = sys.n_spins();
    let hx = collective_control(n, ControlAxis::X)?;
    let hy = collective_control(n, ControlAxis::Y)?;
    let mut h = drift_hamiltonian(sys)
        + hx * Complex64::new(r * pulse.amps_x()[j], 0.0)
        + hy * Complex64::new(r * pulse.amps_y()[j], 0.0);
    if let Some(eta) = eta_hz {
        h += dephasing_generator(n)? * Complex64::new(2.0 * PI * eta, 0.0);
    }
    Ok(h)
}

/// Time-ordered product `U_N ··· U_1` of segment propagators given in
/// chronological order.
pub fn total_propagator(segment_us: &[Operator]) -> Result<Operator> {
    let first = segment_us
        .first()
        .ok_or_else(|| Error::Pulse("empty propagator list".into()))?;
    let mut acc = identity(first.nrows());
    for u in segment_us {
        ensure_same_dim(&acc, u)?;
        acc = u * acc;
    }
    Ok(acc)
}

/// `U ρ U†`.
pub fn evolve_state(rho0: &Operator, u: &Operator) -> Result<Operator> {
    ensure_same_dim(rho0, u)?;
    Ok(u * rho0 * u.adjoint())
}

/// One segment's spectral data: `H = W Λ W†` and `U = exp(−iτH)`.
#[derive(Debug, Clone)]
pub struct SegmentEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Operator,
    pub propagator: Operator,
}

/// Precomputed drift and control operators for repeated segment
/// propagation on one spin system.
///
/// Segment propagators use the identity
/// `ω_x H_x + ω_y H_y = e^{−iφH_z}(A H_x)e^{iφH_z}` with `A e^{iφ} = ω_x + iω_y`.
/// Since the drift and the dephasing term are diagonal they commute with
/// `H_z`, so each segment only needs a real symmetric eigendecomposition
/// of `H_0 + 2πη H_z + rA H_x`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    dim: usize,
    drift_diag: Vec<f64>,
    hz_diag: Vec<f64>,
    hx_real: DMatrix<f64>,
    hx: Operator,
    hy: Operator,
}

impl Dynamics {
    pub fn new(sys: &SpinSystem) -> Result<Self> {
        let n = sys.n_spins();
        let hx = collective_control(n, ControlAxis::X)?;
        let hy = collective_control(n, ControlAxis::Y)?;
        Ok(Self {
            dim: sys.dim(),
            drift_diag: drift_diagonal(sys),
            hz_diag: hz_diagonal(n),
            hx_real: hx.map(|z| z.re),
            hx,
            hy,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn control(&self, axis: ControlAxis) -> &Operator {
        match axis {
            ControlAxis::X => &self.hx,
            ControlAxis::Y => &self.hy,
        }
    }

    pub fn hz_diagonal(&self) -> &[f64] {
        &self.hz_diag
    }

    /// Spectral decomposition and propagator of one segment.
    pub fn segment(&self, wx: f64, wy: f64, r: f64, eta_hz: f64, tau: f64) -> Result<SegmentEigen> {
        let d = self.dim;
        let amp = r * wx.hypot(wy);
        let phi = wy.atan2(wx);
        let mut m = &self.hx_real * amp;
        for i in 0..d {
            m[(i, i)] = self.drift_diag[i] + 2.0 * PI * eta_hz * self.hz_diag[i];
        }
        let eig = SymmetricEigen::new(m);
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen);
        }
        let v = eig.eigenvectors;
        let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();

        // W = D_φ V with D_φ = diag(e^{−iφ m_k})
        let rot: Vec<Complex64> = self
            .hz_diag
            .iter()
            .map(|mk| Complex64::from_polar(1.0, -phi * mk))
            .collect();
        let mut w = Operator::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                w[(i, k)] = rot[i] * v[(i, k)];
            }
        }
        let e: Vec<Complex64> = lambda.iter().map(|l| Complex64::from_polar(1.0, -tau * l)).collect();
        // U = W e^{−iτΛ} W†
        let mut u = Operator::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += e[k] * v[(a, k)] * v[(b, k)];
                }
                u[(a, b)] = acc * rot[a] * rot[b].conj();
            }
        }
        Ok(SegmentEigen {
            eigenvalues: lambda,
            eigenvectors: w,
            propagator: u,
        })
    }

    /// Chronological list of segment decompositions for one ensemble member
    /// and an optional noise trajectory.
    pub fn segments(
        &self,
        pulse: &PulseSequence,
        r: f64,
        noise: Option<&NoiseTrajectory>,
    ) -> Result<Vec<SegmentEigen>> {
        if let Some(tr) = noise {
            if tr.len() != pulse.segments() {
                return Err(Error::Dimension {
                    expected: pulse.segments(),
                    found: tr.len(),
                });
            }
        }
        (0..pulse.segments())
            .map(|j| {
                let eta = noise.map_or(0.0, |tr| tr.etas()[j]);
                self.segment(pulse.amps_x()[j], pulse.amps_y()[j], r, eta, pulse.tau())
            })
            .collect()
    }

    /// Sequence propagator `U_N ··· U_1` without keeping spectral data.
    pub fn sequence_propagator(
        &self,
        pulse: &PulseSequence,
        r: f64,
        noise: Option<&NoiseTrajectory>,
    ) -> Result<Operator> {
        let mut acc = identity(self.dim);
        for j in 0..pulse.segments() {
            let eta = noise.map_or(0.0, |tr| tr.etas()[j]);
            let seg = self.segment(pulse.amps_x()[j], pulse.amps_y()[j], r, eta, pulse.tau())?;
            acc = seg.propagator * acc;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, hermitian_spectrum_desc, is_unitary, unitarity_deviation};
    use crate::spinsys::{spin_operator, Axis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng, scale: f64) -> Operator {
        let a = Operator::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
        });
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&Operator::zeros(4, 4), 1.3).unwrap();
        assert!(frobenius_norm(&(u - identity(4))) < 1e-15);
    }

    #[test]
    fn pi_rotation_about_x() {
        let omega = 2.0 * PI * 1000.0;
        let tau = PI / omega;
        let h = spin_operator(1, 0, Axis::X).unwrap() * Complex64::new(omega, 0.0);
        let u = expm_hermitian(&h, tau).unwrap();
        // exp(−iπσ_x/2) = −iσ_x: |0> → −i|1>
        assert!(u[(0, 0)].norm() < 1e-12);
        assert!((u[(1, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(0, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut h = Operator::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(expm_hermitian(&h, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expm_is_unitary_and_a_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 4, 8] {
            for _ in 0..20 {
                let h = random_hermitian(dim, &mut rng, 50.0);
                let (t1, t2) = (rng.random_range(0.0..0.1), rng.random_range(0.0..0.1));
                let u1 = expm_hermitian(&h, t1).unwrap();
                let u2 = expm_hermitian(&h, t2).unwrap();
                let u12 = expm_hermitian(&h, t1 + t2).unwrap();
                assert!(unitarity_deviation(&u1) < 1e-10);
                assert!(frobenius_norm(&(&u1 * &u2 - u12)) < 1e-10);
            }
        }
    }

    #[test]
    fn segment_hamiltonian_terms() {
        let sys = SpinSystem::from_hz(&[0.0, 127.4], &[8.8]).unwrap();
        let pulse = PulseSequence::new(1e-3, vec![0.0, 300.0], vec![0.0, -150.0]).unwrap();
        let h0 = drift_hamiltonian(&sys);
        assert_eq!(segment_hamiltonian(&sys, &pulse, 0, 1.0, None).unwrap(), h0);
        assert_eq!(segment_hamiltonian(&sys, &pulse, 1, 0.0, None).unwrap(), h0);

        let zeta = 5.0;
        let h = segment_hamiltonian(&sys, &pulse, 1, 1.1, Some(zeta / 2.0)).unwrap();
        let hx = collective_control(2, ControlAxis::X).unwrap();
        let hy = collective_control(2, ControlAxis::Y).unwrap();
        let hz = dephasing_generator(2).unwrap();
        let expected = &h0
            + hx * Complex64::new(1.1 * 300.0, 0.0)
            + hy * Complex64::new(1.1 * -150.0, 0.0)
            + hz * Complex64::new(2.0 * PI * 2.5, 0.0);
        assert!(frobenius_norm(&(h - expected)) < 1e-12);
        assert!(segment_hamiltonian(&sys, &pulse, 2, 1.0, None).is_err());
    }

    #[test]
    fn total_propagator_order() {
        let id = identity(2);
        assert_eq!(total_propagator(&[id.clone(), id.clone()]).unwrap(), id);

        let iz = spin_operator(1, 0, Axis::Z).unwrap();
        let a = expm_hermitian(&iz, 0.3).unwrap();
        let b = expm_hermitian(&iz, 0.9).unwrap();
        let ab = total_propagator(&[a, b]).unwrap();
        assert!(frobenius_norm(&(ab - expm_hermitian(&iz, 1.2).unwrap())) < 1e-12);

        // non-commuting: x then y versus y then x
        let ix = spin_operator(1, 0, Axis::X).unwrap();
        let iy = spin_operator(1, 0, Axis::Y).unwrap();
        let ux = expm_hermitian(&ix, PI / 2.0).unwrap();
        let uy = expm_hermitian(&iy, PI / 2.0).unwrap();
        let xy = total_propagator(&[ux.clone(), uy.clone()]).unwrap();
        assert!(frobenius_norm(&(&xy - &uy * &ux)) < 1e-14);
        let yx = total_propagator(&[uy, ux]).unwrap();
        assert!(frobenius_norm(&(xy - yx)) > 0.5);

        assert!(total_propagator(&[]).is_err());
        assert!(total_propagator(&[identity(2), identity(4)]).is_err());
    }

    #[test]
    fn evolution_preserves_trace_norm_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_hermitian(4, &mut rng, 1.0);
        assert_eq!(evolve_state(&rho, &identity(4)).unwrap(), rho);
        let u = expm_hermitian(&random_hermitian(4, &mut rng, 10.0), 0.7).unwrap();
        let out = evolve_state(&rho, &u).unwrap();
        assert!((out.trace() - rho.trace()).norm() < 1e-12);
        assert!((frobenius_norm(&out) - frobenius_norm(&rho)).abs() < 1e-12);
        let (s0, s1) = (hermitian_spectrum_desc(&rho), hermitian_spectrum_desc(&out));
        for (a, b) in s0.iter().zip(&s1) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(evolve_state(&rho, &identity(2)).is_err());
    }

    #[test]
    fn fast_segment_path_matches_generic_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = SpinSystem::from_hz(&[-2000.0, 0.0, 2500.0], &[50.0, 30.0, 10.0]).unwrap();
        let dynamics = Dynamics::new(&sys).unwrap();
        for _ in 0..25 {
            let wx = rng.random_range(-2e4..2e4);
            let wy = rng.random_range(-2e4..2e4);
            let r = rng.random_range(0.8..1.2);
            let eta = rng.random_range(-10.0..10.0);
            let tau = 1e-5;
            let pulse = PulseSequence::new(tau, vec![wx], vec![wy]).unwrap();
            let h = segment_hamiltonian(&sys, &pulse, 0, r, Some(eta)).unwrap();
            let reference = expm_hermitian(&h, tau).unwrap();
            let seg = dynamics.segment(wx, wy, r, eta, tau).unwrap();
            assert!(frobenius_norm(&(&seg.propagator - &reference)) < 1e-10);
            assert!(is_unitary(&seg.propagator, 1e-10));
            // W diagonalizes H
            let w = &seg.eigenvectors;
            let lam = crate::linalg::from_real_diag(&seg.eigenvalues);
            assert!(frobenius_norm(&(w * lam * w.adjoint() - h)) < 1e-8);
        }
    }

    #[test]
    fn rfi_validation() {
        assert!(RfiDistribution::new(vec![0.9, 1.0, 1.1], vec![0.2, 0.6, 0.2]).is_ok());
        assert!(RfiDistribution::new(vec![0.9, 1.0], vec![0.2, 0.6]).is_err());
        assert!(RfiDistribution::new(vec![1.0], vec![0.2, 0.8]).is_err());
        assert!(RfiDistribution::new(vec![1.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(RfiDistribution::new(vec![], vec![]).is_err());
    }

    #[test]
    fn noise_trajectory_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tr = NoiseTrajectory::sample_uniform(1000, 5.0, &mut rng).unwrap();
        assert!(tr.etas().iter().all(|e| e.abs() <= 2.5));
        assert!(NoiseTrajectory::new(vec![3.0], 5.0).is_err());
        assert!(NoiseTrajectory::silent(3).etas().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn pulse_validation() {
        assert!(PulseSequence::zeros(0, 1e-3).is_err());
        assert!(PulseSequence::zeros(4, 0.0).is_err());
        assert!(PulseSequence::new(1e-3, vec![1.0], vec![]).is_err());
        let p = PulseSequence::from_polar(1e-3, &[100.0], &[PI / 2.0], vec![true]).unwrap();
        assert!(p.amps_x()[0].abs() < 1e-12);
        assert!((p.amps_y()[0] - 100.0).abs() < 1e-12);
        assert!(p.is_frozen(0));
    }
}
