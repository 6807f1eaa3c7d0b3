// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Optimization drivers: plain GRAPE, the SA/GRAPE hybrid, and the hybrid
//! trained under injected dephasing noise.
//!
//! Every outer iteration runs `κ` annealing moves (skipped for GRAPE),
//! evaluates the fidelity and gradient of the resulting pulse, records a
//! trace point, checks the stopping rules and finally takes one gradient
//! step. The step's output seeds the next sweep, and the annealing
//! temperature persists across iterations.

use std::f64::consts::PI;
use std::ops::Range;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anneal::{sa_sweep, AnnealState};
use crate::error::{Error, Result};
use crate::objective::{grape_step, ControlTask, GradientField, Objective};
use crate::propagate::{NoiseTrajectory, PulseSequence, RfiDistribution};
use crate::spinsys::SpinSystem;

/// Random stream used for initial pulses.
pub const STREAM_INIT: u64 = 0;
/// Random stream used for annealing proposals.
pub const STREAM_ANNEAL: u64 = 1;
/// Random stream used for training-noise trajectories.
pub const STREAM_NOISE: u64 = 2;
/// Random stream used by the Monte-Carlo test bench.
pub const STREAM_BENCH: u64 = 3;

/// Independent ChaCha stream `stream` of the generator seeded by `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Grape,
    Sagrape,
    Rsagrape,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Grape => "GRAPE",
            Algorithm::Sagrape => "SAGRAPE",
            Algorithm::Rsagrape => "RSAGRAPE",
        }
    }
}

/// Optimizer settings.
///
/// Cost is measured in units of one noiseless ensemble fidelity
/// evaluation; a trajectory-averaged evaluation costs `K` units and a
/// gradient evaluation costs `gradient_cost` times as much as the
/// corresponding fidelity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub kappa: usize,
    pub t0: f64,
    pub gamma: f64,
    /// Half-width of the uniform neighbor move, rad/s.
    pub neighbor_scale: f64,
    pub zeta_hz: f64,
    pub noise_ensemble: usize,
    pub max_iters: usize,
    pub target_fidelity: f64,
    pub budget_s: Option<f64>,
    pub max_evals: Option<f64>,
    pub gradient_cost: f64,
    pub amp_max: Option<f64>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Grape,
            epsilon: 1e6,
            kappa: 50,
            t0: 1.0,
            gamma: 0.99,
            neighbor_scale: 2.0 * PI * 50.0,
            zeta_hz: 5.0,
            noise_ensemble: 10,
            max_iters: 1000,
            target_fidelity: 0.99,
            budget_s: None,
            max_evals: None,
            gradient_cost: 2.5,
            amp_max: None,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return bad(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        if !(self.target_fidelity > 0.0 && self.target_fidelity <= 1.0) {
            return bad(format!("target_fidelity must lie in (0, 1], got {}", self.target_fidelity));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.gradient_cost > 0.0) || !self.gradient_cost.is_finite() {
            return bad(format!("gradient_cost must be positive, got {}", self.gradient_cost));
        }
        if let Some(b) = self.budget_s {
            if !(b > 0.0) {
                return bad(format!("budget_s must be positive, got {b}"));
            }
        }
        if let Some(m) = self.max_evals {
            if !(m > 0.0) {
                return bad(format!("max_evals must be positive, got {m}"));
            }
        }
        if let Some(a) = self.amp_max {
            if !(a > 0.0) || !a.is_finite() {
                return bad(format!("amp_max must be positive, got {a}"));
            }
        }
        if self.algorithm != Algorithm::Grape {
            if !(self.t0 > 0.0) || !self.t0.is_finite() {
                return bad(format!("t0 must be positive, got {}", self.t0));
            }
            if !(self.gamma > 0.0 && self.gamma < 1.0) {
                return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
            }
            if !(self.neighbor_scale >= 0.0) || !self.neighbor_scale.is_finite() {
                return bad(format!("neighbor_scale must be nonnegative, got {}", self.neighbor_scale));
            }
        }
        if self.algorithm == Algorithm::Rsagrape {
            if !(self.zeta_hz > 0.0) || !self.zeta_hz.is_finite() {
                return bad(format!("zeta_hz must be positive for RSAGRAPE, got {}", self.zeta_hz));
            }
            if self.noise_ensemble == 0 {
                return bad("noise_ensemble must be at least 1".into());
            }
        }
        Ok(())
    }

    fn expect(&self, algorithm: Algorithm) -> Result<()> {
        if self.algorithm != algorithm {
            return Err(Error::Config(format!(
                "configured algorithm is {}, expected {}",
                self.algorithm.name(),
                algorithm.name()
            )));
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    IterationCap,
    TimeBudget,
    EvalBudget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::TargetReached => "target_reached",
            StopReason::IterationCap => "iteration_cap",
            StopReason::TimeBudget => "time_budget",
            StopReason::EvalBudget => "eval_budget",
        }
    }
}

/// One trace entry, recorded at each gradient evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub elapsed_s: f64,
    /// Cumulative cost in evaluation units.
    pub evals: f64,
    /// Objective value as seen by the optimizer (trajectory-averaged for
    /// RSAGRAPE).
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_pulse: PulseSequence,
    pub trace: Vec<TracePoint>,
    /// Noiseless ensemble fidelity of `best_pulse`.
    pub final_fidelity: f64,
    /// Attainability bound of the task (1 for gates).
    pub bound: f64,
    pub stop_reason: StopReason,
    pub fidelity_evals: usize,
    pub gradient_evals: usize,
    pub config: OptimizerConfig,
}

impl OptimizationResult {
    /// `final_fidelity / bound`.
    pub fn normalized_fidelity(&self) -> f64 {
        self.final_fidelity / self.bound
    }

    pub fn total_evals(&self) -> f64 {
        self.trace.last().map_or(0.0, |p| p.evals)
    }
}

/// Segment ranges of `n_pulses` π blocks at CPMG positions: block `k` is
/// centered at `(2k−1)/(2n)` of the sequence and spans
/// `round(π/(amp·τ))` segments.
pub fn cpmg_blocks(segments: usize, tau: f64, n_pulses: usize, pi_amplitude: f64) -> Result<Vec<Range<usize>>> {
    if n_pulses == 0 {
        return Err(Error::Cpmg("at least one π pulse is required".into()));
    }
    let len = block_length(tau, pi_amplitude)?;
    let mut blocks: Vec<Range<usize>> = Vec::with_capacity(n_pulses);
    for k in 1..=n_pulses {
        let center = (2 * k - 1) as f64 / (2 * n_pulses) as f64 * segments as f64;
        let start = (center - len as f64 / 2.0 + 0.5).floor();
        if start < 0.0 || start as usize + len > segments {
            return Err(Error::Cpmg(format!("block {k} exceeds the {segments}-segment sequence")));
        }
        let start = start as usize;
        if let Some(prev) = blocks.last() {
            if start < prev.end {
                return Err(Error::Cpmg(format!("blocks {} and {k} overlap", k - 1)));
            }
        }
        blocks.push(start..start + len);
    }
    Ok(blocks)
}

/// Overwrites the CPMG blocks with `(ω_x, ω_y) = (pi_amplitude, 0)` and
/// freezes them.
pub fn freeze_cpmg(pulse: &PulseSequence, n_pulses: usize, pi_amplitude: f64) -> Result<PulseSequence> {
    let blocks = cpmg_blocks(pulse.segments(), pulse.tau(), n_pulses, pi_amplitude)?;
    let mut out = pulse.clone();
    for j in blocks.into_iter().flatten() {
        out.set_segment(j, pi_amplitude, 0.0);
        out.set_frozen(j, true);
    }
    Ok(out)
}

/// Rotation angle actually implemented by one frozen CPMG block.
pub fn cpmg_rotation_angle(tau: f64, pi_amplitude: f64) -> Result<f64> {
    let len = block_length(tau, pi_amplitude)?;
    Ok(pi_amplitude * tau * len as f64)
}

fn block_length(tau: f64, pi_amplitude: f64) -> Result<usize> {
    if !(pi_amplitude > 0.0) || !pi_amplitude.is_finite() {
        return Err(Error::Cpmg(format!("π amplitude must be positive, got {pi_amplitude}")));
    }
    let len = (PI / (pi_amplitude * tau)).round();
    if !(len >= 1.0) {
        return Err(Error::Cpmg(format!(
            "π duration {:.3e} s is shorter than half a segment ({tau:.3e} s)",
            PI / pi_amplitude
        )));
    }
    Ok(len as usize)
}

/// Evaluation front end: optional noise averaging plus cost bookkeeping.
struct Evaluator<'a> {
    objective: &'a Objective,
    noise: Option<(f64, usize, ChaCha8Rng)>,
    gradient_cost: f64,
    fidelity_evals: usize,
    gradient_evals: usize,
    cost: f64,
}

impl<'a> Evaluator<'a> {
    fn trajectories(&mut self, segments: usize) -> Result<Vec<NoiseTrajectory>> {
        match &mut self.noise {
            None => Ok(Vec::new()),
            Some((zeta, k, rng)) => (0..*k)
                .map(|_| NoiseTrajectory::sample_uniform(segments, *zeta, rng))
                .collect(),
        }
    }

    fn weight(&self) -> f64 {
        self.noise.as_ref().map_or(1.0, |(_, k, _)| *k as f64)
    }

    fn fidelity(&mut self, pulse: &PulseSequence) -> Result<f64> {
        let noise = self.trajectories(pulse.segments())?;
        self.fidelity_evals += 1;
        self.cost += self.weight();
        self.objective.fidelity(pulse, &noise)
    }

    fn fidelity_and_gradient(&mut self, pulse: &PulseSequence) -> Result<(f64, GradientField)> {
        let noise = self.trajectories(pulse.segments())?;
        self.gradient_evals += 1;
        self.cost += self.weight() * self.gradient_cost;
        self.objective.fidelity_and_gradient(pulse, &noise)
    }
}

fn run(
    objective: &Objective,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
    observer: &mut dyn FnMut(&TracePoint),
) -> Result<OptimizationResult> {
    let start = Instant::now();
    let kappa = if config.algorithm == Algorithm::Grape { 0 } else { config.kappa };
    let mut anneal = if kappa > 0 {
        Some(
            AnnealState::new(config.t0, config.gamma, config.neighbor_scale, rng_stream(config.seed, STREAM_ANNEAL))?
                .with_amp_limit(config.amp_max),
        )
    } else {
        None
    };
    let noise = (config.algorithm == Algorithm::Rsagrape)
        .then(|| (config.zeta_hz, config.noise_ensemble, rng_stream(config.seed, STREAM_NOISE)));
    let mut eval = Evaluator {
        objective,
        noise,
        gradient_cost: config.gradient_cost,
        fidelity_evals: 0,
        gradient_evals: 0,
        cost: 0.0,
    };
    let bound = objective.bound();

    let mut pulse = pulse0.clone();
    let mut known: Option<f64> = None;
    let mut trace = Vec::new();
    let mut best: Option<(f64, PulseSequence)> = None;
    let stop_reason = loop {
        if let Some(state) = anneal.as_mut() {
            let sweep = sa_sweep(&pulse, known, |p| eval.fidelity(p), kappa, state)?;
            pulse = sweep.pulse;
        }
        let (phi, grad) = eval.fidelity_and_gradient(&pulse)?;
        let point = TracePoint {
            iteration: trace.len(),
            elapsed_s: start.elapsed().as_secs_f64(),
            evals: eval.cost,
            fidelity: phi,
        };
        observer(&point);
        trace.push(point);
        if best.as_ref().is_none_or(|(b, _)| phi > *b) {
            best = Some((phi, pulse.clone()));
        }

        if phi / bound >= config.target_fidelity {
            break StopReason::TargetReached;
        }
        if trace.len() >= config.max_iters {
            break StopReason::IterationCap;
        }
        if config.budget_s.is_some_and(|b| start.elapsed().as_secs_f64() >= b) {
            break StopReason::TimeBudget;
        }
        if config.max_evals.is_some_and(|m| eval.cost >= m) {
            break StopReason::EvalBudget;
        }

        pulse = grape_step(&pulse, &grad, config.epsilon, config.amp_max);
        known = None;
    };

    let (_, best_pulse) = best.expect("trace is non-empty");
    let final_fidelity = objective.fidelity(&best_pulse, &[])?;
    Ok(OptimizationResult {
        best_pulse,
        trace,
        final_fidelity,
        bound,
        stop_reason,
        fidelity_evals: eval.fidelity_evals,
        gradient_evals: eval.gradient_evals,
        config: config.clone(),
    })
}

/// Runs whichever algorithm `config` selects.
pub fn optimize(
    sys: &SpinSystem,
    task: &ControlTask,
    rfi: &RfiDistribution,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let objective = Objective::new(sys, task.clone(), rfi.clone())?;
    optimize_with(&objective, pulse0, config)
}

/// As [`optimize`], reusing a prepared objective.
pub fn optimize_with(objective: &Objective, pulse0: &PulseSequence, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    run(objective, pulse0, config, &mut |_| {})
}

/// As [`optimize_with`], reporting each trace point as it is recorded so
/// callers keep a partial trace if a later step fails.
pub fn optimize_observed(
    objective: &Objective,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
    mut observer: impl FnMut(&TracePoint),
) -> Result<OptimizationResult> {
    config.validate()?;
    run(objective, pulse0, config, &mut observer)
}

pub fn optimize_grape(
    sys: &SpinSystem,
    task: &ControlTask,
    rfi: &RfiDistribution,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.expect(Algorithm::Grape)?;
    optimize(sys, task, rfi, pulse0, config)
}

pub fn optimize_sagrape(
    sys: &SpinSystem,
    task: &ControlTask,
    rfi: &RfiDistribution,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.expect(Algorithm::Sagrape)?;
    optimize(sys, task, rfi, pulse0, config)
}

pub fn optimize_rsagrape(
    sys: &SpinSystem,
    task: &ControlTask,
    rfi: &RfiDistribution,
    pulse0: &PulseSequence,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.expect(Algorithm::Rsagrape)?;
    optimize(sys, task, rfi, pulse0, config)
}
