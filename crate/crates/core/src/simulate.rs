// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo dephasing bench: pulse robustness under a random global
//! z-field, CPMG decay measurements and noise spectroscopy, and the
//! convergence benchmark harness.
//!
//! Noise fields are piecewise constant on a grid of step `dt` and are
//! integrated exactly: pulse segments that straddle grid points are split
//! into sub-segments, and free evolution (diagonal in the computational
//! basis) only needs the field integral.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{optimize_with, rng_stream, Algorithm, OptimizationResult, OptimizerConfig, STREAM_BENCH, STREAM_INIT};
use crate::linalg::{frobenius_norm, identity, trace_product, Operator};
use crate::objective::Objective;
use crate::propagate::{Dynamics, PulseSequence};
use crate::spinsys::{drift_diagonal, hz_diagonal, spin_operator, Axis, SpinSystem};
use crate::tasks::{singlet_target, thermal_z};

/// Fitted T2 values above this multiple of the observation window count as
/// "no decay".
const T2_CAP_FACTOR: f64 = 1e3;
/// Envelope points below this fraction of the first point are excluded
/// from the decay fit.
const FIT_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// I.i.d. values on `[−ζ/2, ζ/2]` Hz, one per step.
    UniformPerSegment { zeta_hz: f64 },
    /// Stationary Ornstein-Uhlenbeck process with rms `sigma_hz` and
    /// correlation time `tau_c_s`.
    OrnsteinUhlenbeck { sigma_hz: f64, tau_c_s: f64 },
}

/// A random z-field `η(t)` in Hz, piecewise constant on steps of `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub dt: f64,
}

impl NoiseModel {
    pub fn uniform(zeta_hz: f64, dt: f64) -> Result<Self> {
        let m = Self {
            kind: NoiseKind::UniformPerSegment { zeta_hz },
            dt,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ornstein_uhlenbeck(sigma_hz: f64, tau_c_s: f64, dt: f64) -> Result<Self> {
        let m = Self {
            kind: NoiseKind::OrnsteinUhlenbeck { sigma_hz, tau_c_s },
            dt,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Noise(format!("step dt must be positive, got {}", self.dt)));
        }
        match self.kind {
            NoiseKind::UniformPerSegment { zeta_hz } => {
                if !(zeta_hz >= 0.0) || !zeta_hz.is_finite() {
                    return Err(Error::Noise(format!("zeta must be nonnegative, got {zeta_hz}")));
                }
            }
            NoiseKind::OrnsteinUhlenbeck { sigma_hz, tau_c_s } => {
                if !(sigma_hz >= 0.0) || !sigma_hz.is_finite() {
                    return Err(Error::Noise(format!("sigma must be nonnegative, got {sigma_hz}")));
                }
                if !(tau_c_s > 0.0) || !tau_c_s.is_finite() {
                    return Err(Error::Noise(format!("correlation time must be positive, got {tau_c_s}")));
                }
            }
        }
        Ok(())
    }

    /// `ζ` for uniform noise, `σ` for OU noise.
    pub fn strength(&self) -> f64 {
        match self.kind {
            NoiseKind::UniformPerSegment { zeta_hz } => zeta_hz,
            NoiseKind::OrnsteinUhlenbeck { sigma_hz, .. } => sigma_hz,
        }
    }

    pub fn with_strength(&self, strength: f64) -> Result<Self> {
        let kind = match self.kind {
            NoiseKind::UniformPerSegment { .. } => NoiseKind::UniformPerSegment { zeta_hz: strength },
            NoiseKind::OrnsteinUhlenbeck { tau_c_s, .. } => NoiseKind::OrnsteinUhlenbeck {
                sigma_hz: strength,
                tau_c_s,
            },
        };
        let m = Self { kind, dt: self.dt };
        m.validate()?;
        Ok(m)
    }

    pub fn sampler<'r, R: Rng + ?Sized>(&self, rng: &'r mut R) -> FieldSampler<'r, R> {
        FieldSampler {
            model: *self,
            rng,
            value: 0.0,
            remaining: 0.0,
            started: false,
        }
    }

    /// First `steps` grid values of one realization.
    pub fn sample<R: Rng + ?Sized>(&self, steps: usize, rng: &mut R) -> Vec<f64> {
        let mut s = self.sampler(rng);
        (0..steps)
            .map(|_| {
                s.advance();
                s.value
            })
            .collect()
    }

    /// Two-sided spectral density of the angular field `2πη` at frequency
    /// `nu_hz`, in s⁻¹. Defined for OU noise only.
    pub fn spectrum(&self, nu_hz: f64) -> Option<f64> {
        match self.kind {
            NoiseKind::OrnsteinUhlenbeck { sigma_hz, tau_c_s } => Some(ou_spectrum(sigma_hz, tau_c_s, nu_hz)),
            NoiseKind::UniformPerSegment { .. } => None,
        }
    }
}

/// Lorentzian `S(ω) = 2σ_b²τ_c / (1 + ω²τ_c²)` with `σ_b = 2πσ` and
/// `ω = 2πν`.
pub fn ou_spectrum(sigma_hz: f64, tau_c_s: f64, nu_hz: f64) -> f64 {
    let sb = 2.0 * PI * sigma_hz;
    let w = 2.0 * PI * nu_hz;
    2.0 * sb * sb * tau_c_s / (1.0 + (w * tau_c_s).powi(2))
}

/// Streams one realization of a [`NoiseModel`] forward in time.
pub struct FieldSampler<'r, R: Rng + ?Sized> {
    model: NoiseModel,
    rng: &'r mut R,
    value: f64,
    remaining: f64,
    started: bool,
}

impl<R: Rng + ?Sized> FieldSampler<'_, R> {
    fn advance(&mut self) {
        self.value = match self.model.kind {
            NoiseKind::UniformPerSegment { zeta_hz } => {
                let half = zeta_hz / 2.0;
                if half > 0.0 {
                    self.rng.random_range(-half..=half)
                } else {
                    0.0
                }
            }
            NoiseKind::OrnsteinUhlenbeck { sigma_hz, tau_c_s } => {
                let xi: f64 = self.rng.sample(StandardNormal);
                if self.started {
                    // exact discretization of dx = −x/τ_c dt + σ√(2/τ_c) dW
                    let a = (-self.model.dt / tau_c_s).exp();
                    a * self.value + sigma_hz * (1.0 - a * a).sqrt() * xi
                } else {
                    sigma_hz * xi
                }
            }
        };
        self.started = true;
        self.remaining = self.model.dt;
    }

    /// Splits the next `duration` seconds into constant-field pieces
    /// `(length, η)`.
    pub fn pieces(&mut self, duration: f64) -> Vec<(f64, f64)> {
        let eps = 1e-9 * self.model.dt;
        let mut out = Vec::new();
        let mut left = duration;
        while left > eps {
            if self.remaining <= eps {
                self.advance();
            }
            let take = if (self.remaining - left).abs() <= eps {
                left
            } else {
                self.remaining.min(left)
            };
            out.push((take, self.value));
            self.remaining -= take;
            left -= take;
        }
        out
    }

    /// `∫η dt` over the next `duration` seconds, Hz·s.
    pub fn integral(&mut self, duration: f64) -> f64 {
        self.pieces(duration).iter().map(|(len, eta)| len * eta).sum()
    }
}

/// Mean of a Monte-Carlo observable with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl McEstimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials: samples.len(),
        }
    }
}

/// Propagator of `pulse` (RF scale `r`) under one field realization.
fn noisy_propagator<R: Rng + ?Sized>(
    dynamics: &Dynamics,
    pulse: &PulseSequence,
    r: f64,
    field: &mut FieldSampler<'_, R>,
) -> Result<Operator> {
    let mut u = identity(dynamics.dim());
    for j in 0..pulse.segments() {
        for (len, eta) in field.pieces(pulse.tau()) {
            let seg = dynamics.segment(pulse.amps_x()[j], pulse.amps_y()[j], r, eta, len)?;
            u = seg.propagator * u;
        }
    }
    Ok(u)
}

/// `ρ ← DρD†` for the diagonal unitary `D = diag(e^{−iθ_k})`.
fn apply_diagonal_phase(rho: &mut Operator, theta: &[f64]) {
    let phases: Vec<Complex64> = theta.iter().map(|t| Complex64::from_polar(1.0, -t)).collect();
    for a in 0..rho.nrows() {
        for b in 0..rho.ncols() {
            rho[(a, b)] *= phases[a] * phases[b].conj();
        }
    }
}

/// Overlap of the state prepared from `I_z` magnetization with the singlet
/// order `−I_0·I_1`, averaged over noise realizations.
///
/// Each trial applies the pulse under a fresh field realization, then a
/// storage window of `storage_s` seconds during which only the noise
/// acts. The overlap is normalized like the state-transfer fidelity.
pub fn singlet_order(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    noise: &NoiseModel,
    storage_s: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if !(storage_s >= 0.0) {
        return Err(Error::Config(format!("storage time must be nonnegative, got {storage_s}")));
    }
    noise.validate()?;
    let n = sys.n_spins();
    let rho0 = thermal_z(n)?;
    let target = singlet_target(n)?;
    let norm = frobenius_norm(&rho0) * frobenius_norm(&target);
    let dynamics = Dynamics::new(sys)?;
    let hz = hz_diagonal(n);
    let mut rng = rng_stream(seed, STREAM_BENCH);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut field = noise.sampler(&mut rng);
        let u = noisy_propagator(&dynamics, pulse, 1.0, &mut field)?;
        let mut rho = &u * &rho0 * u.adjoint();
        if storage_s > 0.0 {
            let phi = 2.0 * PI * field.integral(storage_s);
            let theta: Vec<f64> = hz.iter().map(|m| phi * m).collect();
            apply_diagonal_phase(&mut rho, &theta);
        }
        samples.push(trace_product(&target, &rho).re / norm);
    }
    Ok(McEstimate::from_samples(&samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub pulse_label: String,
    pub noise_strength: f64,
    pub mean_order: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Singlet order of every pulse at every noise strength.
///
/// All pulses see the same seed at a given strength, so pulses with equal
/// segment counts are compared on identical field realizations.
pub fn robustness_scan(
    sys: &SpinSystem,
    pulses: &[(String, PulseSequence)],
    noise: &NoiseModel,
    strengths: &[f64],
    storage_s: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::with_capacity(pulses.len() * strengths.len());
    for (label, pulse) in pulses {
        for (k, &s) in strengths.iter().enumerate() {
            let est = singlet_order(sys, pulse, &noise.with_strength(s)?, storage_s, trials, seed.wrapping_add(k as u64))?;
            rows.push(RobustnessRow {
                pulse_label: label.clone(),
                noise_strength: s,
                mean_order: est.mean,
                stderr: est.stderr,
                trials: est.trials,
            });
        }
    }
    Ok(rows)
}

/// Settings shared by every CPMG decay measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpmgProtocol {
    /// Observed spin; it starts along x and is read out as `⟨I_x⟩`.
    pub spin: usize,
    pub trials: usize,
    pub max_echoes: usize,
    pub seed: u64,
}

/// Trial-averaged echo amplitudes, normalized to the first echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Runs `[δ/2 − π − δ/2]` blocks, with pulse centers spaced by `delta`,
/// and records `⟨I_x⟩` of the observed spin after each block.
pub fn cpmg_envelope(
    sys: &SpinSystem,
    pi_pulse: &PulseSequence,
    delta: f64,
    noise: &NoiseModel,
    protocol: &CpmgProtocol,
) -> Result<Envelope> {
    let n = sys.n_spins();
    if protocol.spin >= n {
        return Err(Error::SpinIndex { index: protocol.spin, n });
    }
    if protocol.trials < 10 {
        return Err(Error::Cpmg(format!("at least 10 trials required, got {}", protocol.trials)));
    }
    if protocol.max_echoes < 2 {
        return Err(Error::Cpmg("at least 2 echoes required".into()));
    }
    let dp = pi_pulse.duration();
    if !(delta > dp) {
        return Err(Error::Cpmg(format!("delay {delta:.3e} s must exceed the π duration {dp:.3e} s")));
    }
    noise.validate()?;

    let dynamics = Dynamics::new(sys)?;
    let h0 = drift_diagonal(sys);
    let hz = hz_diagonal(n);
    let obs = spin_operator(n, protocol.spin, Axis::X)?;
    let obs_norm = trace_product(&obs, &obs).re;
    let free = (delta - dp) / 2.0;
    let free_phase = |phi: f64| -> Vec<f64> { h0.iter().zip(&hz).map(|(e, m)| e * free + 2.0 * PI * phi * m).collect() };

    let mut rng = rng_stream(protocol.seed, STREAM_BENCH);
    let mut sums = vec![0.0; protocol.max_echoes];
    for _ in 0..protocol.trials {
        let mut field = noise.sampler(&mut rng);
        let mut rho = obs.clone();
        for slot in sums.iter_mut() {
            apply_diagonal_phase(&mut rho, &free_phase(field.integral(free)));
            let u = noisy_propagator(&dynamics, pi_pulse, 1.0, &mut field)?;
            rho = &u * &rho * u.adjoint();
            apply_diagonal_phase(&mut rho, &free_phase(field.integral(free)));
            *slot += trace_product(&obs, &rho).re / obs_norm;
        }
    }
    let first = sums[0];
    if !(first.abs() > 0.0) {
        return Err(Error::Fit("first echo has zero amplitude".into()));
    }
    Ok(Envelope {
        times: (1..=protocol.max_echoes).map(|m| m as f64 * delta).collect(),
        values: sums.iter().map(|s| s / first).collect(),
    })
}

/// Single-exponential decay constant from a log-linear least-squares fit
/// on the leading points at or above 5% of the first point.
pub fn fit_t2(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Fit("times and values must be nonempty and equally long".into()));
    }
    let first = values[0];
    // everything after the first sub-floor point is treated as noise
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .take_while(|(_, v)| **v >= FIT_FLOOR * first && **v > 0.0)
        .map(|(t, v)| (*t, (v / first).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit("fewer than two points above the noise floor".into()));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let cap = T2_CAP_FACTOR * times[times.len() - 1];
    if !(slope < 0.0) || -1.0 / slope > cap {
        return Err(Error::NonDecaying { cap });
    }
    Ok(-1.0 / slope)
}

pub fn cpmg_t2(
    sys: &SpinSystem,
    pi_pulse: &PulseSequence,
    delta: f64,
    noise: &NoiseModel,
    protocol: &CpmgProtocol,
) -> Result<f64> {
    let env = cpmg_envelope(sys, pi_pulse, delta, noise, protocol)?;
    fit_t2(&env.times, &env.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyRow {
    pub delta_s: f64,
    pub nu_hz: f64,
    pub t2_s: f64,
    pub s_per_s: f64,
    pub fit_ok: bool,
}

impl SpectroscopyRow {
    /// Row for delay `delta` and decay constant `t2`: `ν = 1/(2δ)`,
    /// `S = π²/(4·T2)`.
    pub fn new(delta_s: f64, t2_s: f64, fit_ok: bool) -> Self {
        Self {
            delta_s,
            nu_hz: 1.0 / (2.0 * delta_s),
            t2_s,
            s_per_s: PI * PI / (4.0 * t2_s),
            fit_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyResult {
    pub rows: Vec<SpectroscopyRow>,
}

/// One CPMG decay measurement per delay.
///
/// A non-decaying envelope yields a flagged row holding the T2 cap; a
/// failed fit yields a flagged row of NaNs.
pub fn noise_spectrum(
    sys: &SpinSystem,
    pi_pulse: &PulseSequence,
    deltas: &[f64],
    noise: &NoiseModel,
    protocol: &CpmgProtocol,
) -> Result<SpectroscopyResult> {
    if deltas.is_empty() {
        return Err(Error::Cpmg("no delays given".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::Cpmg(format!("delays must be positive, got {d}")));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        let p = CpmgProtocol {
            seed: protocol.seed.wrapping_add(i as u64),
            ..*protocol
        };
        let row = match cpmg_t2(sys, pi_pulse, delta, noise, &p) {
            Ok(t2) => SpectroscopyRow::new(delta, t2, true),
            Err(Error::NonDecaying { cap }) => SpectroscopyRow::new(delta, cap, false),
            Err(Error::Fit(_)) => SpectroscopyRow::new(delta, f64::NAN, false),
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(SpectroscopyResult { rows })
}

/// Random initial pulse for a benchmark trial.
pub fn initial_pulse(segments: usize, duration_s: f64, amplitude: f64, seed: u64) -> Result<PulseSequence> {
    if segments == 0 || !(duration_s > 0.0) {
        return Err(Error::Pulse("segments and duration must be positive".into()));
    }
    PulseSequence::random(segments, duration_s / segments as f64, amplitude, &mut rng_stream(seed, STREAM_INIT))
}

/// Label used in benchmark output: the algorithm name, with `κ` appended
/// for the annealing variants.
pub fn algorithm_label(config: &OptimizerConfig) -> String {
    match config.algorithm {
        Algorithm::Grape => "GRAPE".into(),
        a => format!("{}-{}", a.name(), config.kappa),
    }
}

/// Picks the step size whose short GRAPE run from `pulse0` ends highest.
pub fn select_epsilon(objective: &Objective, pulse0: &PulseSequence, grid: &[f64], iters: usize) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &epsilon in grid {
        let config = OptimizerConfig {
            algorithm: Algorithm::Grape,
            epsilon,
            max_iters: iters.max(1),
            target_fidelity: 1.0,
            ..OptimizerConfig::default()
        };
        let r = optimize_with(objective, pulse0, &config)?;
        let end = r.trace.last().map_or(f64::MIN, |p| p.fidelity);
        if best.is_none_or(|(_, b)| end > b) {
            best = Some((epsilon, end));
        }
    }
    best.map(|(e, _)| e).ok_or_else(|| Error::Config("empty epsilon grid".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub segments: usize,
    pub duration_s: f64,
    /// Half-width of the uniform initial amplitudes, rad/s.
    pub init_amplitude: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One optimization of a benchmark: trial `trial` of algorithm `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkJob {
    pub label: String,
    pub trial: usize,
    pub config: OptimizerConfig,
    pub pulse0: PulseSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub label: String,
    pub trial: usize,
    pub result: OptimizationResult,
}

/// Expands algorithms × trials into jobs. Trial `t` starts every algorithm
/// from the same pulse and runs with seed `seed + t`.
pub fn benchmark_jobs(algorithms: &[OptimizerConfig], spec: &BenchmarkSpec) -> Result<Vec<BenchmarkJob>> {
    if algorithms.is_empty() {
        return Err(Error::Config("no algorithms to benchmark".into()));
    }
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut jobs = Vec::with_capacity(algorithms.len() * spec.trials);
    for config in algorithms {
        config.validate()?;
        for trial in 0..spec.trials {
            let seed = spec.seed.wrapping_add(trial as u64);
            jobs.push(BenchmarkJob {
                label: algorithm_label(config),
                trial,
                config: OptimizerConfig { seed, ..config.clone() },
                pulse0: initial_pulse(spec.segments, spec.duration_s, spec.init_amplitude, seed)?,
            });
        }
    }
    Ok(jobs)
}

pub fn run_job(objective: &Objective, job: &BenchmarkJob) -> Result<BenchmarkRun> {
    Ok(BenchmarkRun {
        label: job.label.clone(),
        trial: job.trial,
        result: optimize_with(objective, &job.pulse0, &job.config)?,
    })
}

/// Runs every job sequentially.
pub fn benchmark_convergence(
    objective: &Objective,
    algorithms: &[OptimizerConfig],
    spec: &BenchmarkSpec,
) -> Result<BenchmarkResult> {
    let runs = benchmark_jobs(algorithms, spec)?
        .iter()
        .map(|job| run_job(objective, job))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkResult { runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub evals: f64,
    pub mean_infidelity: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub runs: Vec<BenchmarkRun>,
}

impl BenchmarkResult {
    /// Distinct labels in first-seen order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    fn runs_of<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a BenchmarkRun> + 'a {
        self.runs.iter().filter(move |r| r.label == label)
    }

    /// `1 − Φ/bound` of each trial's best pulse (noiseless).
    pub fn final_infidelities(&self, label: &str) -> Vec<f64> {
        self.runs_of(label).map(|r| 1.0 - r.result.normalized_fidelity()).collect()
    }

    /// Mean best-so-far infidelity across trials at each evaluation count
    /// in `grid`.
    pub fn mean_curve(&self, label: &str, grid: &[f64]) -> Vec<CurvePoint> {
        let runs: Vec<&BenchmarkRun> = self.runs_of(label).collect();
        grid.iter()
            .map(|&g| {
                let vals: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        let best = r
                            .result
                            .trace
                            .iter()
                            .take_while(|p| p.evals <= g)
                            .map(|p| p.fidelity)
                            .fold(f64::NEG_INFINITY, f64::max);
                        1.0 - best / r.result.bound
                    })
                    .collect();
                let est = McEstimate::from_samples(&vals);
                CurvePoint {
                    evals: g,
                    mean_infidelity: est.mean,
                    stderr: est.stderr,
                }
            })
            .collect()
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// `algorithm,trial,iteration,evals,wallclock_s,fidelity`, with fidelity
/// relative to the task's bound.
pub fn write_convergence_csv<W: Write>(out: W, result: &BenchmarkResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "trial", "iteration", "evals", "wallclock_s", "fidelity"])
        .map_err(csv_err)?;
    for run in &result.runs {
        for p in &run.result.trace {
            w.write_record([
                run.label.clone(),
                run.trial.to_string(),
                p.iteration.to_string(),
                p.evals.to_string(),
                p.elapsed_s.to_string(),
                (p.fidelity / run.result.bound).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// `algorithm,evals,mean_infidelity,stderr`.
pub fn write_curve_csv<W: Write>(out: W, curves: &[(String, Vec<CurvePoint>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "evals", "mean_infidelity", "stderr"])
        .map_err(csv_err)?;
    for (label, points) in curves {
        for p in points {
            w.write_record([
                label.clone(),
                p.evals.to_string(),
                p.mean_infidelity.to_string(),
                p.stderr.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// `delta_s,nu_hz,t2_s,s_per_s,fit_ok`.
pub fn write_spectroscopy_csv<W: Write>(out: W, result: &SpectroscopyResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta_s", "nu_hz", "t2_s", "s_per_s", "fit_ok"])
        .map_err(csv_err)?;
    for r in &result.rows {
        w.write_record([
            r.delta_s.to_string(),
            r.nu_hz.to_string(),
            r.t2_s.to_string(),
            r.s_per_s.to_string(),
            u8::from(r.fit_ok).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// `pulse_label,noise_strength,mean_order,stderr,trials`.
pub fn write_robustness_csv<W: Write>(out: W, rows: &[RobustnessRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pulse_label", "noise_strength", "mean_order", "stderr", "trials"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.pulse_label.clone(),
            r.noise_strength.to_string(),
            r.mean_order.to_string(),
            r.stderr.to_string(),
            r.trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
