// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ensemble-averaged fidelities, their gradients, and the GRAPE update.
//!
//! State transfer uses the normalized correlation
//! `Φ = Σ_m p_m Tr[ρ_F† U_m ρ_0 U_m†] / (‖ρ_F‖ ‖ρ_0‖)`; gate synthesis uses
//! `Φ = Σ_m p_m |Tr[U_m† U_F]|² / D²`. Both gradients carry the
//! normalization so that a GRAPE step ascends the reported value.
//!
//! Gradients are computed with one forward and one backward sweep per
//! ensemble member. [`GradientMode::Exact`] differentiates each segment
//! exponential through its eigenbasis (divided differences of
//! `λ ↦ e^{−iτλ}`), which is exact for any `τ‖H‖`.
//! [`GradientMode::FirstOrder`] uses the classic `∂U_j ≈ −iτ H_α U_j`
//! approximation and is only accurate for `τ‖H‖ ≪ 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_hermitian, frobenius_norm, hermitian_spectrum_desc, identity, is_unitary,
    trace_product, Operator, ZERO,
};
use crate::propagate::{Dynamics, NoiseTrajectory, PulseSequence, RfiDistribution, SegmentEigen};
use crate::spinsys::{ControlAxis, SpinSystem};

#[derive(Debug, Clone, PartialEq)]
pub enum ControlTask {
    StateTransfer { rho0: Operator, rho_f: Operator },
    GateSynthesis { target: Operator },
}

impl ControlTask {
    pub fn state_transfer(rho0: Operator, rho_f: Operator) -> Result<Self> {
        if rho0.shape() != rho_f.shape() {
            return Err(Error::Dimension {
                expected: rho0.nrows(),
                found: rho_f.nrows(),
            });
        }
        ensure_hermitian(&rho0, 1e-12).map_err(|e| Error::Task(format!("ρ0: {e}")))?;
        ensure_hermitian(&rho_f, 1e-12).map_err(|e| Error::Task(format!("ρF: {e}")))?;
        if frobenius_norm(&rho0) == 0.0 {
            return Err(Error::ZeroNorm("initial state"));
        }
        if frobenius_norm(&rho_f) == 0.0 {
            return Err(Error::ZeroNorm("target state"));
        }
        Ok(Self::StateTransfer { rho0, rho_f })
    }

    pub fn gate(target: Operator) -> Result<Self> {
        if !is_unitary(&target, 1e-10) {
            return Err(Error::Task("target gate is not unitary".into()));
        }
        Ok(Self::GateSynthesis { target })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::StateTransfer { rho0, .. } => rho0.nrows(),
            Self::GateSynthesis { target } => target.nrows(),
        }
    }

    pub fn is_state_transfer(&self) -> bool {
        matches!(self, Self::StateTransfer { .. })
    }
}

/// `∂Φ/∂ω_x(j)` and `∂Φ/∂ω_y(j)`; exactly zero on frozen segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        Self {
            gx: vec![0.0; n],
            gy: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.gx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gx.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.gx.iter().chain(&self.gy).map(|g| g * g).sum()
    }

    fn add_scaled(&mut self, other: &GradientField, w: f64) {
        for (a, b) in self.gx.iter_mut().zip(&other.gx) {
            *a += w * b;
        }
        for (a, b) in self.gy.iter_mut().zip(&other.gy) {
            *a += w * b;
        }
    }

    fn is_finite(&self) -> bool {
        self.gx.iter().chain(&self.gy).all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Exact,
    FirstOrder,
}

/// Maximum normalized overlap `Tr[ρ_F U ρ_0 U†]/(‖ρ_F‖‖ρ_0‖)` over all
/// unitaries: eigenvalues paired in descending order.
pub fn attainability_bound(rho0: &Operator, rho_f: &Operator) -> Result<f64> {
    ensure_hermitian(rho0, 1e-12)?;
    ensure_hermitian(rho_f, 1e-12)?;
    let (n0, nf) = (frobenius_norm(rho0), frobenius_norm(rho_f));
    if n0 == 0.0 {
        return Err(Error::ZeroNorm("initial state"));
    }
    if nf == 0.0 {
        return Err(Error::ZeroNorm("target state"));
    }
    let a = hermitian_spectrum_desc(rho0);
    let b = hermitian_spectrum_desc(rho_f);
    Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / (n0 * nf))
}

/// Fidelity evaluator bound to one system, task and RFI ensemble.
#[derive(Debug, Clone)]
pub struct Objective {
    dynamics: Dynamics,
    task: ControlTask,
    rfi: RfiDistribution,
    mode: GradientMode,
    norm: f64,
    bound: f64,
}

impl Objective {
    pub fn new(sys: &SpinSystem, task: ControlTask, rfi: RfiDistribution) -> Result<Self> {
        let dynamics = Dynamics::new(sys)?;
        if task.dim() != dynamics.dim() {
            return Err(Error::Dimension {
                expected: dynamics.dim(),
                found: task.dim(),
            });
        }
        let (norm, bound) = match &task {
            ControlTask::StateTransfer { rho0, rho_f } => (
                frobenius_norm(rho0) * frobenius_norm(rho_f),
                attainability_bound(rho0, rho_f)?,
            ),
            ControlTask::GateSynthesis { .. } => {
                let d = dynamics.dim() as f64;
                (d * d, 1.0)
            }
        };
        Ok(Self {
            dynamics,
            task,
            rfi,
            mode: GradientMode::Exact,
            norm,
            bound,
        })
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn task(&self) -> &ControlTask {
        &self.task
    }

    pub fn rfi(&self) -> &RfiDistribution {
        &self.rfi
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.mode
    }

    /// Largest reachable fidelity: the attainability bound for state
    /// transfer, 1 for gates.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Fidelity of a single member/trajectory pair.
    pub fn member_fidelity(
        &self,
        pulse: &PulseSequence,
        r: f64,
        noise: Option<&NoiseTrajectory>,
    ) -> Result<f64> {
        let u = self.dynamics.sequence_propagator(pulse, r, noise)?;
        Ok(self.fidelity_of_propagator(&u))
    }

    pub fn fidelity_of_propagator(&self, u: &Operator) -> f64 {
        match &self.task {
            ControlTask::StateTransfer { rho0, rho_f } => {
                let evolved = u * rho0 * u.adjoint();
                trace_product(rho_f, &evolved).re / self.norm
            }
            ControlTask::GateSynthesis { target } => {
                trace_product(&target.adjoint(), u).norm_sqr() / self.norm
            }
        }
    }

    /// Ensemble fidelity, averaged over the given noise trajectories (an
    /// empty slice means noiseless).
    pub fn fidelity(&self, pulse: &PulseSequence, noise: &[NoiseTrajectory]) -> Result<f64> {
        let value = if noise.is_empty() {
            self.ensemble_fidelity(pulse, None)?
        } else {
            let mut acc = 0.0;
            for tr in noise {
                acc += self.ensemble_fidelity(pulse, Some(tr))?;
            }
            acc / noise.len() as f64
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("fidelity"));
        }
        Ok(value)
    }

    fn ensemble_fidelity(&self, pulse: &PulseSequence, noise: Option<&NoiseTrajectory>) -> Result<f64> {
        let mut acc = 0.0;
        for (r, p) in self.rfi.members() {
            acc += p * self.member_fidelity(pulse, r, noise)?;
        }
        Ok(acc)
    }

    /// Fidelity and its gradient, averaged like [`Objective::fidelity`].
    pub fn fidelity_and_gradient(
        &self,
        pulse: &PulseSequence,
        noise: &[NoiseTrajectory],
    ) -> Result<(f64, GradientField)> {
        let n = pulse.segments();
        let (value, grad) = if noise.is_empty() {
            self.ensemble_gradient(pulse, None)?
        } else {
            let mut value = 0.0;
            let mut grad = GradientField::zeros(n);
            let w = 1.0 / noise.len() as f64;
            for tr in noise {
                let (v, g) = self.ensemble_gradient(pulse, Some(tr))?;
                value += v;
                grad.add_scaled(&g, 1.0);
            }
            value *= w;
            for g in grad.gx.iter_mut().chain(grad.gy.iter_mut()) {
                *g *= w;
            }
            (value, grad)
        };
        if !value.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        Ok((value, grad))
    }

    fn ensemble_gradient(
        &self,
        pulse: &PulseSequence,
        noise: Option<&NoiseTrajectory>,
    ) -> Result<(f64, GradientField)> {
        let mut value = 0.0;
        let mut grad = GradientField::zeros(pulse.segments());
        for (r, p) in self.rfi.members() {
            let (v, g) = self.member_gradient(pulse, r, noise)?;
            value += p * v;
            grad.add_scaled(&g, p);
        }
        for j in 0..pulse.segments() {
            if pulse.is_frozen(j) {
                grad.gx[j] = 0.0;
                grad.gy[j] = 0.0;
            }
        }
        Ok((value, grad))
    }

    /// Fidelity and gradient for one ensemble member and trajectory.
    pub fn member_gradient(
        &self,
        pulse: &PulseSequence,
        r: f64,
        noise: Option<&NoiseTrajectory>,
    ) -> Result<(f64, GradientField)> {
        let segs = self.dynamics.segments(pulse, r, noise)?;
        match &self.task {
            ControlTask::StateTransfer { rho0, rho_f } => {
                Ok(self.state_member_gradient(&segs, pulse, r, rho0, rho_f))
            }
            ControlTask::GateSynthesis { target } => {
                Ok(self.gate_member_gradient(&segs, pulse, r, target))
            }
        }
    }

    fn state_member_gradient(
        &self,
        segs: &[SegmentEigen],
        pulse: &PulseSequence,
        r: f64,
        rho0: &Operator,
        rho_f: &Operator,
    ) -> (f64, GradientField) {
        let n = segs.len();
        let tau = pulse.tau();
        // states before each segment: before[j] = ρ_{j−1}
        let mut before = Vec::with_capacity(n);
        let mut rho = rho0.clone();
        for seg in segs {
            let next = &seg.propagator * &rho * seg.propagator.adjoint();
            before.push(std::mem::replace(&mut rho, next));
        }
        let value = trace_product(rho_f, &rho).re / self.norm;

        let mut grad = GradientField::zeros(n);
        // costate after segment j: λ_j = B_j† ρ_F B_j
        let mut lambda = rho_f.clone();
        for j in (0..n).rev() {
            let seg = &segs[j];
            if !pulse.is_frozen(j) {
                let (gx, gy) = match self.mode {
                    GradientMode::Exact => {
                        // Tr[λ_j dU_j ρ_{j−1} U_j†] = Σ_ab Q_ba Γ_ab K_ab
                        let t = &before[j] * seg.propagator.adjoint() * &lambda;
                        let q = seg.eigenvectors.adjoint() * t * &seg.eigenvectors;
                        self.eigenbasis_directional(seg, &q, r, tau, |z| 2.0 * z.re)
                    }
                    GradientMode::FirstOrder => {
                        // 2τr Im Tr[λ_j H_α ρ_j]
                        let rho_j = &seg.propagator * &before[j] * seg.propagator.adjoint();
                        let m = &rho_j * &lambda;
                        let f = |axis| {
                            2.0 * tau * r * trace_product(self.dynamics.control(axis), &m).im
                        };
                        (f(ControlAxis::X), f(ControlAxis::Y))
                    }
                };
                grad.gx[j] = gx / self.norm;
                grad.gy[j] = gy / self.norm;
            }
            lambda = seg.propagator.adjoint() * &lambda * &seg.propagator;
        }
        (value, grad)
    }

    fn gate_member_gradient(
        &self,
        segs: &[SegmentEigen],
        pulse: &PulseSequence,
        r: f64,
        target: &Operator,
    ) -> (f64, GradientField) {
        let n = segs.len();
        let tau = pulse.tau();
        let d = self.dynamics.dim();
        // before[j] = X_{j−1} = U_{j−1} ··· U_0
        let mut before = Vec::with_capacity(n);
        let mut x = identity(d);
        for seg in segs {
            let next = &seg.propagator * &x;
            before.push(std::mem::replace(&mut x, next));
        }
        let overlap = trace_product(&target.adjoint(), &x);
        let value = overlap.norm_sqr() / self.norm;

        let mut grad = GradientField::zeros(n);
        // P_j = U_{j+1}† ··· U_{N−1}† U_F
        let mut p = target.clone();
        for j in (0..n).rev() {
            let seg = &segs[j];
            if !pulse.is_frozen(j) {
                let (gx, gy) = match self.mode {
                    GradientMode::Exact => {
                        // dc = Tr[P_j† dU_j X_{j−1}] = Σ_ab Q_ba Γ_ab K_ab
                        let t = &before[j] * p.adjoint();
                        let q = seg.eigenvectors.adjoint() * t * &seg.eigenvectors;
                        self.eigenbasis_directional(seg, &q, r, tau, |dc| {
                            2.0 * (overlap.conj() * dc).re
                        })
                    }
                    GradientMode::FirstOrder => {
                        // 2τr Im{Tr[P_j† H_α X_j] Tr[X_j† P_j]}
                        let x_j = &seg.propagator * &before[j];
                        let m = &x_j * p.adjoint();
                        let f = |axis| {
                            let h = trace_product(self.dynamics.control(axis), &m);
                            2.0 * tau * r * (h * overlap.conj()).im
                        };
                        (f(ControlAxis::X), f(ControlAxis::Y))
                    }
                };
                grad.gx[j] = gx / self.norm;
                grad.gy[j] = gy / self.norm;
            }
            p = seg.propagator.adjoint() * p;
        }
        (value, grad)
    }

    /// Evaluates `reduce(Σ_ab Q_ba Γ_ab K^α_ab)` for both control axes, where
    /// `K^α = r W† H_α W` and `Γ` holds divided differences of `e^{−iτλ}`.
    fn eigenbasis_directional(
        &self,
        seg: &SegmentEigen,
        q: &Operator,
        r: f64,
        tau: f64,
        reduce: impl Fn(Complex64) -> f64,
    ) -> (f64, f64) {
        let d = seg.eigenvalues.len();
        let w = &seg.eigenvectors;
        let kx = w.adjoint() * self.dynamics.control(ControlAxis::X) * w;
        let ky = w.adjoint() * self.dynamics.control(ControlAxis::Y) * w;
        let (mut sx, mut sy) = (ZERO, ZERO);
        for a in 0..d {
            for b in 0..d {
                let g = divided_difference(seg.eigenvalues[a], seg.eigenvalues[b], tau);
                let qg = q[(b, a)] * g;
                sx += qg * kx[(a, b)];
                sy += qg * ky[(a, b)];
            }
        }
        (reduce(sx * r), reduce(sy * r))
    }
}

/// `(e^{−iτa} − e^{−iτb})/(a − b)`, continuous at `a = b`.
fn divided_difference(a: f64, b: f64, tau: f64) -> Complex64 {
    let mean = 0.5 * (a + b);
    let x = 0.5 * tau * (a - b);
    let sinc = if x.abs() < 1e-6 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(1.0, -tau * mean) * Complex64::new(0.0, -tau * sinc)
}

fn require_state(task: &ControlTask) -> Result<()> {
    if !task.is_state_transfer() {
        return Err(Error::Task("expected a state-transfer task".into()));
    }
    Ok(())
}

fn require_gate(task: &ControlTask) -> Result<()> {
    if task.is_state_transfer() {
        return Err(Error::Task("expected a gate-synthesis task".into()));
    }
    Ok(())
}

pub fn state_fidelity(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    task: &ControlTask,
    rfi: &RfiDistribution,
) -> Result<f64> {
    require_state(task)?;
    Objective::new(sys, task.clone(), rfi.clone())?.fidelity(pulse, &[])
}

pub fn gate_fidelity(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    task: &ControlTask,
    rfi: &RfiDistribution,
) -> Result<f64> {
    require_gate(task)?;
    Objective::new(sys, task.clone(), rfi.clone())?.fidelity(pulse, &[])
}

pub fn state_gradient(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    task: &ControlTask,
    rfi: &RfiDistribution,
) -> Result<GradientField> {
    require_state(task)?;
    Ok(Objective::new(sys, task.clone(), rfi.clone())?
        .fidelity_and_gradient(pulse, &[])?
        .1)
}

pub fn gate_gradient(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    task: &ControlTask,
    rfi: &RfiDistribution,
) -> Result<GradientField> {
    require_gate(task)?;
    Ok(Objective::new(sys, task.clone(), rfi.clone())?
        .fidelity_and_gradient(pulse, &[])?
        .1)
}

/// `ω ← ω + εG` on unfrozen segments, then an optional amplitude clamp that
/// rescales `(ω_x, ω_y)` to at most `amp_max` while keeping the phase.
pub fn grape_step(
    pulse: &PulseSequence,
    grad: &GradientField,
    epsilon: f64,
    amp_max: Option<f64>,
) -> PulseSequence {
    let mut next = pulse.clone();
    next.update_unfrozen(|j, x, y| {
        let (x, y) = (x + epsilon * grad.gx[j], y + epsilon * grad.gy[j]);
        match amp_max {
            Some(limit) => clamp_amplitude(x, y, limit),
            None => (x, y),
        }
    });
    next
}

pub(crate) fn clamp_amplitude(x: f64, y: f64, limit: f64) -> (f64, f64) {
    let a = x.hypot(y);
    if a > limit && a > 0.0 {
        let s = limit / a;
        (x * s, y * s)
    } else {
        (x, y)
    }
}
