// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulated-annealing kernel: box-uniform neighbor proposals, the
//! deterministic acceptance threshold
//! `Δ = −min[1, T·exp(δΦ/T)]` (accept iff `δΦ ≥ Δ`), and geometric
//! cooling applied after every iteration whether or not the move was
//! accepted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::clamp_amplitude;
use crate::propagate::PulseSequence;

/// Acceptance threshold `Δ ∈ [−1, 0]` for a fidelity change at
/// temperature `t`.
pub fn threshold(delta_phi: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Temperature(t));
    }
    Ok(-(t * (delta_phi / t).exp()).min(1.0))
}

pub fn accepts(delta_phi: f64, t: f64) -> Result<bool> {
    Ok(delta_phi >= threshold(delta_phi, t)?)
}

/// Perturbs every unfrozen amplitude by an independent uniform draw in
/// `[−scale, scale]`.
pub fn propose_neighbor<R: Rng + ?Sized>(pulse: &PulseSequence, scale: f64, rng: &mut R) -> PulseSequence {
    let mut next = pulse.clone();
    if scale > 0.0 {
        next.update_unfrozen(|_, x, y| {
            (x + rng.random_range(-scale..=scale), y + rng.random_range(-scale..=scale))
        });
    }
    next
}

/// Temperature schedule plus the random stream used for proposals.
#[derive(Debug, Clone)]
pub struct AnnealState {
    temperature: f64,
    cooling: f64,
    step_scale: f64,
    amp_limit: Option<f64>,
    rng: ChaCha8Rng,
}

impl AnnealState {
    pub fn new(t0: f64, cooling: f64, step_scale: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::Temperature(t0));
        }
        if !(cooling > 0.0 && cooling < 1.0) {
            return Err(Error::Config(format!("cooling factor must lie in (0, 1), got {cooling}")));
        }
        if !(step_scale >= 0.0) || !step_scale.is_finite() {
            return Err(Error::Config(format!("neighbor scale must be nonnegative, got {step_scale}")));
        }
        Ok(Self {
            temperature: t0,
            cooling,
            step_scale,
            amp_limit: None,
            rng,
        })
    }

    pub fn from_seed(t0: f64, cooling: f64, step_scale: f64, seed: u64) -> Result<Self> {
        Self::new(t0, cooling, step_scale, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Proposals are rescaled to at most this amplitude per segment.
    pub fn with_amp_limit(mut self, limit: Option<f64>) -> Self {
        self.amp_limit = limit;
        self
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn cooling(&self) -> f64 {
        self.cooling
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }

    /// `T ← γT`, floored at the smallest positive normal float so the
    /// temperature never reaches zero.
    fn cool(&mut self) {
        self.temperature = (self.temperature * self.cooling).max(f64::MIN_POSITIVE);
    }

    fn propose(&mut self, pulse: &PulseSequence) -> PulseSequence {
        let mut next = propose_neighbor(pulse, self.step_scale, &mut self.rng);
        if let Some(limit) = self.amp_limit {
            next.update_unfrozen(|_, x, y| clamp_amplitude(x, y, limit));
        }
        next
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub pulse: PulseSequence,
    /// Fidelity of `pulse` as seen by the sweep, `None` only when no
    /// evaluation happened (`κ = 0` and no starting value supplied).
    pub fidelity: Option<f64>,
    pub accepted: usize,
    pub evaluations: usize,
}

/// Runs `kappa` propose/evaluate/accept iterations starting from `pulse`.
///
/// `start_fidelity` avoids re-evaluating a starting point whose value is
/// already known; otherwise it costs one extra evaluation.
pub fn sa_sweep<F>(
    pulse: &PulseSequence,
    start_fidelity: Option<f64>,
    mut fidelity_fn: F,
    kappa: usize,
    state: &mut AnnealState,
) -> Result<SweepOutcome>
where
    F: FnMut(&PulseSequence) -> Result<f64>,
{
    let mut current = pulse.clone();
    if kappa == 0 {
        return Ok(SweepOutcome {
            pulse: current,
            fidelity: start_fidelity,
            accepted: 0,
            evaluations: 0,
        });
    }
    let mut evaluations = 0;
    let mut phi = match start_fidelity {
        Some(v) => v,
        None => {
            evaluations += 1;
            fidelity_fn(&current)?
        }
    };
    let mut accepted = 0;
    for _ in 0..kappa {
        let candidate = state.propose(&current);
        let phi_candidate = fidelity_fn(&candidate)?;
        evaluations += 1;
        let delta = phi_candidate - phi;
        let accept = accepts(delta, state.temperature)?;
        state.cool();
        if accept {
            current = candidate;
            phi = phi_candidate;
            accepted += 1;
        }
    }
    Ok(SweepOutcome {
        pulse: current,
        fidelity: Some(phi),
        accepted,
        evaluations,
    })
}
