// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! Every table rejects unknown keys. Defaults are filled in during
//! deserialization, so serializing a parsed [`RunConfig`] echoes every
//! value a run used. Offsets, couplings and noise strengths are in Hz;
//! RF amplitudes are in rad/s.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinctl_core::hybrid::OptimizerConfig;
use spinctl_core::linalg::from_rows;
use spinctl_core::simulate::{initial_pulse, CpmgProtocol};
use spinctl_core::{
    freeze_cpmg, tasks, Algorithm, ControlTask, NoiseModel, Operator, PulseSequence, RfiDistribution, SpinSystem,
};
use thiserror::Error;

use crate::shape::import_pulse;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("missing required table `[{0}]`")]
    Missing(&'static str),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl ToString) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub rfi: RfiConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisespec: Option<NoiseSpecSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessSection>,
    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub offsets_hz: Vec<f64>,
    #[serde(default = "Couplings::none")]
    pub couplings_hz: Couplings,
}

/// Either the upper triangle in row order (`J_01, J_02, …, J_12, …`) or
/// the full symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Couplings {
    Upper(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl Couplings {
    fn none() -> Self {
        Self::Upper(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// Shorthand for `thermal_z → lls` on two spins.
    Lls,
    State { initial: StateSpec, target: StateSpec },
    Gate { target: GateSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(NamedState),
    Matrix(MatrixConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    ThermalZ,
    Lls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Named(NamedGate),
    SelectivePi(SelectivePiSpec),
    Matrix(MatrixConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGate {
    Cnot,
}

/// π rotation about x of one spin (zero-based), identity on the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectivePiSpec {
    pub selective_pi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPulse {
    #[default]
    Random,
    Zero,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub duration_s: f64,
    pub segments: usize,
    #[serde(default)]
    pub initial: InitialPulse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Half-width of the uniform random start on each axis.
    #[serde(default = "default_init_amplitude")]
    pub init_amplitude_rad_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp_max_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpmg: Option<CpmgConfig>,
}

fn default_init_amplitude() -> f64 {
    2.0 * PI * 50.0
}

/// Frozen, equally spaced π pulses embedded in the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpmgConfig {
    pub n_pulses: usize,
    pub pi_amplitude_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfiConfig {
    pub scales: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Default for RfiConfig {
    fn default() -> Self {
        Self {
            scales: vec![1.0],
            probs: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSetting {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub algorithm: Algorithm,
    /// GRAPE step size, or `"auto"` to pick the best of `epsilon_grid`
    /// after `epsilon_probe_iters` GRAPE iterations.
    pub epsilon: EpsilonSetting,
    pub epsilon_grid: Vec<f64>,
    pub epsilon_probe_iters: usize,
    pub kappa: usize,
    pub t0: f64,
    pub gamma: f64,
    pub neighbor_scale_hz: f64,
    pub zeta_hz: f64,
    pub noise_ensemble: usize,
    pub max_iters: usize,
    pub target_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<f64>,
    pub gradient_cost: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            algorithm: d.algorithm,
            epsilon: EpsilonSetting::Fixed(d.epsilon),
            epsilon_grid: vec![1e2, 1e3, 1e4, 1e5, 1e6, 1e7],
            epsilon_probe_iters: 5,
            kappa: d.kappa,
            t0: d.t0,
            gamma: d.gamma,
            neighbor_scale_hz: d.neighbor_scale / (2.0 * PI),
            zeta_hz: d.zeta_hz,
            noise_ensemble: d.noise_ensemble,
            max_iters: d.max_iters,
            target_fidelity: d.target_fidelity,
            budget_s: d.budget_s,
            max_evals: d.max_evals,
            gradient_cost: d.gradient_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_benchmark_trials")]
    pub trials: usize,
    /// Points on the evaluation-cost grid of the averaged curves.
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

fn default_benchmark_trials() -> usize {
    5
}

fn default_curve_points() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    /// Uniform values on `[−ζ/2, ζ/2]`, redrawn every `dt_s`.
    Uniform {
        #[serde(default)]
        zeta_hz: f64,
        dt_s: f64,
    },
    OrnsteinUhlenbeck { sigma_hz: f64, tau_c_s: f64, dt_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpecSection {
    pub deltas_s: Vec<f64>,
    #[serde(default)]
    pub spin: usize,
    #[serde(default = "default_mc_trials")]
    pub trials: usize,
    #[serde(default = "default_max_echoes")]
    pub max_echoes: usize,
    /// Amplitude of the single-segment hard π pulse used when no
    /// `pi_pulse_file` is given.
    #[serde(default = "default_hard_pi")]
    pub pi_amplitude_rad_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_pulse_file: Option<PathBuf>,
}

fn default_mc_trials() -> usize {
    200
}

fn default_max_echoes() -> usize {
    200
}

fn default_hard_pi() -> f64 {
    2.0 * PI * 50e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSection {
    pub pulses: Vec<LabeledPulse>,
    pub strengths_hz: Vec<f64>,
    #[serde(default = "default_mc_trials")]
    pub trials: usize,
    #[serde(default)]
    pub storage_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPulse {
    pub label: String,
    pub file: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every table present.
    pub fn validate(&self) -> Result<()> {
        let sys = self.spin_system()?;
        self.rfi()?;
        if self.task.is_some() {
            self.task(&sys)?;
        }
        if self.pulse.is_some() {
            self.initial_pulse()?;
        }
        self.optimizer()?;
        if let Some(b) = &self.benchmark {
            if b.algorithms.is_empty() {
                return Err(ConfigError::invalid("benchmark.algorithms", "at least one algorithm required"));
            }
            if b.trials == 0 {
                return Err(ConfigError::invalid("benchmark.trials", "must be at least 1"));
            }
            if b.curve_points < 2 {
                return Err(ConfigError::invalid("benchmark.curve_points", "must be at least 2"));
            }
        }
        if self.noise.is_some() {
            self.noise_model()?;
        }
        if self.noisespec.is_some() {
            self.noisespec_inputs(&sys)?;
        }
        if self.robustness.is_some() {
            self.robustness_inputs(&sys)?;
        }
        Ok(())
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn spin_system(&self) -> Result<SpinSystem> {
        let s = &self.system;
        match &s.couplings_hz {
            Couplings::Upper(upper) => SpinSystem::from_hz(&s.offsets_hz, upper),
            Couplings::Full(full) => {
                SpinSystem::new(s.offsets_hz.iter().map(|o| 2.0 * PI * o).collect(), full.clone())
            }
        }
        .map_err(|e| {
            let key = if e.to_string().contains("coupling") {
                "system.couplings_hz"
            } else {
                "system.offsets_hz"
            };
            ConfigError::invalid(key, e)
        })
    }

    pub fn rfi(&self) -> Result<RfiDistribution> {
        let key = if self.rfi.scales.is_empty() || self.rfi.scales.iter().any(|s| !s.is_finite()) {
            "rfi.scales"
        } else {
            "rfi.probs"
        };
        RfiDistribution::new(self.rfi.scales.clone(), self.rfi.probs.clone()).map_err(|e| ConfigError::invalid(key, e))
    }

    pub fn task(&self, sys: &SpinSystem) -> Result<ControlTask> {
        let task = self.task.as_ref().ok_or(ConfigError::Missing("task"))?;
        let n = sys.n_spins();
        let dim = sys.dim();
        let built = match task {
            TaskConfig::Lls => {
                if n != 2 {
                    return Err(ConfigError::invalid("task.type", format!("lls needs 2 spins, system has {n}")));
                }
                tasks::lls_transfer().map_err(|e| ConfigError::invalid("task.type", e))?
            }
            TaskConfig::State { initial, target } => {
                let rho0 = state_operator(initial, n, dim, "task.initial")?;
                let rho_f = state_operator(target, n, dim, "task.target")?;
                ControlTask::state_transfer(rho0, rho_f).map_err(|e| ConfigError::invalid("task", e))?
            }
            TaskConfig::Gate { target } => {
                let u = match target {
                    GateSpec::Named(NamedGate::Cnot) => {
                        if n != 2 {
                            return Err(ConfigError::invalid("task.target", format!("cnot needs 2 spins, system has {n}")));
                        }
                        tasks::cnot()
                    }
                    GateSpec::SelectivePi(s) => tasks::selective_pi(n, s.selective_pi)
                        .map_err(|e| ConfigError::invalid("task.target.selective_pi", e))?,
                    GateSpec::Matrix(m) => explicit(m, dim, "task.target")?,
                };
                ControlTask::gate(u).map_err(|e| ConfigError::invalid("task.target", e))?
            }
        };
        Ok(built)
    }

    fn pulse_config(&self) -> Result<&PulseConfig> {
        self.pulse.as_ref().ok_or(ConfigError::Missing("pulse"))
    }

    /// Starting pulse for seed [`RunConfig::seed`], with CPMG blocks
    /// frozen in when configured.
    pub fn initial_pulse(&self) -> Result<PulseSequence> {
        self.initial_pulse_for_seed(self.seed)
    }

    pub fn initial_pulse_for_seed(&self, seed: u64) -> Result<PulseSequence> {
        let p = self.pulse_config()?;
        if !(p.duration_s > 0.0 && p.duration_s.is_finite()) {
            return Err(ConfigError::invalid("pulse.duration_s", format!("must be positive, got {}", p.duration_s)));
        }
        if p.segments == 0 {
            return Err(ConfigError::invalid("pulse.segments", "must be at least 1"));
        }
        if !(p.init_amplitude_rad_s >= 0.0 && p.init_amplitude_rad_s.is_finite()) {
            return Err(ConfigError::invalid(
                "pulse.init_amplitude_rad_s",
                format!("must be nonnegative, got {}", p.init_amplitude_rad_s),
            ));
        }
        if let Some(a) = p.amp_max_rad_s {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ConfigError::invalid("pulse.amp_max_rad_s", format!("must be positive, got {a}")));
            }
        }
        let tau = p.duration_s / p.segments as f64;
        let pulse = match p.initial {
            InitialPulse::Random => initial_pulse(p.segments, p.duration_s, p.init_amplitude_rad_s, seed)
                .map_err(|e| ConfigError::invalid("pulse", e))?,
            InitialPulse::Zero => PulseSequence::zeros(p.segments, tau).map_err(|e| ConfigError::invalid("pulse", e))?,
            InitialPulse::File => {
                let file = p
                    .file
                    .as_ref()
                    .ok_or_else(|| ConfigError::invalid("pulse.file", "required when initial = \"file\""))?;
                let loaded = import_pulse(&self.resolve_path(file)).map_err(|e| ConfigError::invalid("pulse.file", e))?;
                if loaded.segments() != p.segments {
                    return Err(ConfigError::invalid(
                        "pulse.segments",
                        format!("file has {} segments, config says {}", loaded.segments(), p.segments),
                    ));
                }
                if ((loaded.tau() - tau) / tau).abs() > 1e-9 {
                    return Err(ConfigError::invalid(
                        "pulse.duration_s",
                        format!("file segment duration {:e} s differs from {:e} s", loaded.tau(), tau),
                    ));
                }
                loaded
            }
        };
        match p.cpmg {
            Some(c) => freeze_cpmg(&pulse, c.n_pulses, c.pi_amplitude_rad_s).map_err(|e| ConfigError::invalid("pulse.cpmg", e)),
            None => Ok(pulse),
        }
    }

    /// Engine settings with `epsilon` left at the fixed value, or at the
    /// default when `"auto"` is requested; callers resolve `"auto"`.
    pub fn optimizer(&self) -> Result<OptimizerConfig> {
        let o = &self.optimizer;
        let epsilon = match o.epsilon {
            EpsilonSetting::Fixed(e) => e,
            EpsilonSetting::Auto(_) => {
                if o.epsilon_grid.is_empty() {
                    return Err(ConfigError::invalid("optimizer.epsilon_grid", "empty grid with epsilon = \"auto\""));
                }
                if let Some(e) = o.epsilon_grid.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                    return Err(ConfigError::invalid("optimizer.epsilon_grid", format!("invalid step size {e}")));
                }
                if o.epsilon_probe_iters == 0 {
                    return Err(ConfigError::invalid("optimizer.epsilon_probe_iters", "must be at least 1"));
                }
                o.epsilon_grid[0]
            }
        };
        let amp_max = self.pulse.as_ref().and_then(|p| p.amp_max_rad_s);
        let cfg = OptimizerConfig {
            algorithm: o.algorithm,
            epsilon,
            kappa: o.kappa,
            t0: o.t0,
            gamma: o.gamma,
            neighbor_scale: 2.0 * PI * o.neighbor_scale_hz,
            zeta_hz: o.zeta_hz,
            noise_ensemble: o.noise_ensemble,
            max_iters: o.max_iters,
            target_fidelity: o.target_fidelity,
            budget_s: o.budget_s,
            max_evals: o.max_evals,
            gradient_cost: o.gradient_cost,
            amp_max,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split(": ")
                .nth(1)
                .and_then(|m| m.split_whitespace().next())
                .unwrap_or("")
                .to_string();
            let key = match field.as_str() {
                "neighbor_scale" => "optimizer.neighbor_scale_hz".to_string(),
                "amp_max" => "pulse.amp_max_rad_s".to_string(),
                "" => "optimizer".to_string(),
                f => format!("optimizer.{f}"),
            };
            ConfigError::invalid(key, msg)
        })?;
        Ok(cfg)
    }

    pub fn epsilon_is_auto(&self) -> bool {
        matches!(self.optimizer.epsilon, EpsilonSetting::Auto(_))
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self.noise.ok_or(ConfigError::Missing("noise"))? {
            NoiseSection::Uniform { zeta_hz, dt_s } => NoiseModel::uniform(zeta_hz, dt_s),
            NoiseSection::OrnsteinUhlenbeck {
                sigma_hz,
                tau_c_s,
                dt_s,
            } => NoiseModel::ornstein_uhlenbeck(sigma_hz, tau_c_s, dt_s),
        }
        .map_err(|e| ConfigError::invalid("noise", e))
    }

    /// π pulse, delays and protocol for a spectroscopy run.
    pub fn noisespec_inputs(&self, sys: &SpinSystem) -> Result<(PulseSequence, Vec<f64>, CpmgProtocol)> {
        let s = self.noisespec.as_ref().ok_or(ConfigError::Missing("noisespec"))?;
        if s.deltas_s.is_empty() {
            return Err(ConfigError::invalid("noisespec.deltas_s", "at least one delay required"));
        }
        if let Some(d) = s.deltas_s.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(ConfigError::invalid("noisespec.deltas_s", format!("delays must be positive, got {d}")));
        }
        if s.spin >= sys.n_spins() {
            return Err(ConfigError::invalid(
                "noisespec.spin",
                format!("spin {} out of range for {} spins", s.spin, sys.n_spins()),
            ));
        }
        if s.trials < 10 {
            return Err(ConfigError::invalid("noisespec.trials", "at least 10 trials required"));
        }
        if s.max_echoes < 2 {
            return Err(ConfigError::invalid("noisespec.max_echoes", "at least 2 echoes required"));
        }
        let pi = match &s.pi_pulse_file {
            Some(f) => import_pulse(&self.resolve_path(f)).map_err(|e| ConfigError::invalid("noisespec.pi_pulse_file", e))?,
            None => {
                let a = s.pi_amplitude_rad_s;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(ConfigError::invalid("noisespec.pi_amplitude_rad_s", format!("must be positive, got {a}")));
                }
                PulseSequence::new(PI / a, vec![a], vec![0.0]).map_err(|e| ConfigError::invalid("noisespec", e))?
            }
        };
        if let Some(d) = s.deltas_s.iter().find(|d| **d <= pi.duration()) {
            return Err(ConfigError::invalid(
                "noisespec.deltas_s",
                format!("delay {d} s does not exceed the π duration {} s", pi.duration()),
            ));
        }
        self.noise_model()?;
        let protocol = CpmgProtocol {
            spin: s.spin,
            trials: s.trials,
            max_echoes: s.max_echoes,
            seed: self.seed,
        };
        Ok((pi, s.deltas_s.clone(), protocol))
    }

    pub fn robustness_inputs(&self, sys: &SpinSystem) -> Result<Vec<(String, PulseSequence)>> {
        let r = self.robustness.as_ref().ok_or(ConfigError::Missing("robustness"))?;
        if sys.n_spins() < 2 {
            return Err(ConfigError::invalid("system.offsets_hz", "singlet order needs at least two spins"));
        }
        if r.pulses.is_empty() {
            return Err(ConfigError::invalid("robustness.pulses", "at least one pulse required"));
        }
        if r.strengths_hz.is_empty() {
            return Err(ConfigError::invalid("robustness.strengths_hz", "at least one strength required"));
        }
        if let Some(s) = r.strengths_hz.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(ConfigError::invalid("robustness.strengths_hz", format!("must be nonnegative, got {s}")));
        }
        if r.trials == 0 {
            return Err(ConfigError::invalid("robustness.trials", "must be at least 1"));
        }
        if !(r.storage_s >= 0.0 && r.storage_s.is_finite()) {
            return Err(ConfigError::invalid("robustness.storage_s", "must be nonnegative"));
        }
        self.noise_model()?;
        r.pulses
            .iter()
            .map(|lp| {
                import_pulse(&self.resolve_path(&lp.file))
                    .map(|p| (lp.label.clone(), p))
                    .map_err(|e| ConfigError::invalid("robustness.pulses", format!("{}: {e}", lp.label)))
            })
            .collect()
    }
}

fn state_operator(spec: &StateSpec, n: usize, dim: usize, key: &str) -> Result<Operator> {
    match spec {
        StateSpec::Named(NamedState::ThermalZ) => tasks::thermal_z(n).map_err(|e| ConfigError::invalid(key, e)),
        StateSpec::Named(NamedState::Lls) => tasks::singlet_target(n).map_err(|e| ConfigError::invalid(key, e)),
        StateSpec::Matrix(m) => explicit(m, dim, key),
    }
}

fn explicit(m: &MatrixConfig, dim: usize, key: &str) -> Result<Operator> {
    let op = from_rows(&m.re, &m.im).map_err(|e| ConfigError::invalid(key, e))?;
    if op.nrows() != dim {
        return Err(ConfigError::invalid(key, format!("matrix is {0}×{0}, system dimension is {dim}", op.nrows())));
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LLS: &str = r#"
seed = 3
[system]
offsets_hz = [0.0, 127.4]
couplings_hz = [8.8]
[task]
type = "lls"
[pulse]
duration_s = 79e-3
segments = 250
[pulse.cpmg]
n_pulses = 6
pi_amplitude_rad_s = 9941.0
[rfi]
scales = [0.9, 1.0, 1.1]
probs = [0.2, 0.6, 0.2]
[optimizer]
algorithm = "RSAGRAPE"
epsilon = 100000
kappa = 10
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("."))
    }

    fn key_of(e: ConfigError) -> String {
        match e {
            ConfigError::Invalid { key, .. } => key,
            other => panic!("expected a key-addressed error, got {other}"),
        }
    }

    #[test]
    fn full_config_resolves() {
        let cfg = parse(LLS).unwrap();
        cfg.validate().unwrap();
        let sys = cfg.spin_system().unwrap();
        assert_eq!(sys.n_spins(), 2);
        assert!(cfg.task(&sys).unwrap().is_state_transfer());
        let p = cfg.initial_pulse().unwrap();
        assert_eq!(p.segments(), 250);
        assert_eq!(p.frozen().iter().filter(|f| **f).count(), 6);
        let o = cfg.optimizer().unwrap();
        assert_eq!(o.algorithm, Algorithm::Rsagrape);
        assert_eq!(o.epsilon, 1e5);
        assert_eq!(o.seed, 3);
        assert!((o.neighbor_scale - 2.0 * PI * 50.0).abs() < 1e-9);
    }

    #[test]
    fn defaults_are_echoed() {
        let cfg = parse(LLS).unwrap();
        let echoed = toml::to_string(&cfg).unwrap();
        for key in ["gamma", "t0", "noise_ensemble", "epsilon_grid", "gradient_cost", "init_amplitude_rad_s"] {
            assert!(echoed.contains(key), "{key} missing from\n{echoed}");
        }
        let again = parse(&echoed).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn probability_error_names_key() {
        let bad = LLS.replace("probs = [0.2, 0.6, 0.2]", "probs = [0.2, 0.6, 0.1]");
        let e = parse(&bad).unwrap().validate().unwrap_err();
        assert!(e.to_string().contains("rfi.probs"), "{e}");
        assert_eq!(key_of(e), "rfi.probs");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = LLS.replace("kappa = 10", "kapa = 10");
        let e = parse(&bad).unwrap_err();
        assert!(e.to_string().contains("kapa"), "{e}");
        let bad = LLS.replace("[rfi]", "[rfi]\nweights = [1]");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn auto_epsilon() {
        let cfg = parse(&LLS.replace("epsilon = 100000", "epsilon = \"auto\"\nepsilon_grid = [1e3, 1e4]")).unwrap();
        assert!(cfg.epsilon_is_auto());
        assert_eq!(cfg.optimizer().unwrap().epsilon, 1e3);
        let empty = parse(&LLS.replace("epsilon = 100000", "epsilon = \"auto\"\nepsilon_grid = []")).unwrap();
        assert_eq!(key_of(empty.optimizer().unwrap_err()), "optimizer.epsilon_grid");
        assert!(parse(&LLS.replace("epsilon = 100000", "epsilon = \"fast\"")).is_err());
    }

    #[test]
    fn optimizer_errors_name_field() {
        let cfg = parse(&LLS.replace("kappa = 10", "kappa = 10\ngamma = 1.5")).unwrap();
        assert_eq!(key_of(cfg.optimizer().unwrap_err()), "optimizer.gamma");
    }

    #[test]
    fn gate_targets() {
        let base = "[system]\noffsets_hz = [0.0]\n[pulse]\nduration_s = 1e-3\nsegments = 10\n";
        let sys = SpinSystem::from_hz(&[0.0], &[]).unwrap();
        let sel = parse(&format!("{base}[task]\ntype = \"gate\"\ntarget = {{ selective_pi = 0 }}\n")).unwrap();
        assert!(!sel.task(&sys).unwrap().is_state_transfer());
        let explicit = parse(&format!(
            "{base}[task]\ntype = \"gate\"\ntarget = {{ re = [[0.0, 1.0], [1.0, 0.0]] }}\n"
        ))
        .unwrap();
        explicit.task(&sys).unwrap();
        let not_unitary = parse(&format!(
            "{base}[task]\ntype = \"gate\"\ntarget = {{ re = [[1.0, 1.0], [1.0, 0.0]] }}\n"
        ))
        .unwrap();
        assert_eq!(key_of(not_unitary.task(&sys).unwrap_err()), "task.target");
        let cnot = parse(&format!("{base}[task]\ntype = \"gate\"\ntarget = \"cnot\"\n")).unwrap();
        assert_eq!(key_of(cnot.task(&sys).unwrap_err()), "task.target");
    }

    #[test]
    fn explicit_state_dimension_checked() {
        let cfg = parse(
            "[system]\noffsets_hz = [0.0, 0.0]\ncouplings_hz = [0.0]\n[task]\ntype = \"state\"\ninitial = \"thermal_z\"\ntarget = { re = [[1.0, 0.0], [0.0, -1.0]] }\n",
        )
        .unwrap();
        let sys = cfg.spin_system().unwrap();
        assert_eq!(key_of(cfg.task(&sys).unwrap_err()), "task.target");
    }

    #[test]
    fn full_coupling_matrix() {
        let cfg = parse("[system]\noffsets_hz = [0.0, 10.0]\ncouplings_hz = [[0.0, 7.0], [7.0, 0.0]]\n").unwrap();
        assert_eq!(cfg.spin_system().unwrap().couplings()[0][1], 7.0);
        let asym = parse("[system]\noffsets_hz = [0.0, 10.0]\ncouplings_hz = [[0.0, 7.0], [6.0, 0.0]]\n").unwrap();
        assert_eq!(key_of(asym.spin_system().unwrap_err()), "system.couplings_hz");
    }

    #[test]
    fn missing_tables() {
        let cfg = parse("[system]\noffsets_hz = [0.0]\n").unwrap();
        cfg.validate().unwrap();
        let sys = cfg.spin_system().unwrap();
        assert!(matches!(cfg.task(&sys), Err(ConfigError::Missing("task"))));
        assert!(matches!(cfg.initial_pulse(), Err(ConfigError::Missing("pulse"))));
        assert!(matches!(cfg.noise_model(), Err(ConfigError::Missing("noise"))));
    }

    #[test]
    fn noisespec_table() {
        let text = "[system]\noffsets_hz = [0.0]\n[noise]\nmodel = \"ornstein_uhlenbeck\"\nsigma_hz = 20.0\ntau_c_s = 1e-3\ndt_s = 5e-5\n[noisespec]\ndeltas_s = [5e-3]\n";
        let cfg = parse(text).unwrap();
        let sys = cfg.spin_system().unwrap();
        let (pi, deltas, protocol) = cfg.noisespec_inputs(&sys).unwrap();
        assert_eq!(pi.segments(), 1);
        assert!((pi.amplitude(0) * pi.duration() - PI).abs() < 1e-12);
        assert_eq!(deltas, vec![5e-3]);
        assert_eq!(protocol.trials, 200);
        let bad = parse(&text.replace("deltas_s = [5e-3]", "deltas_s = [1e-6]")).unwrap();
        assert_eq!(key_of(bad.noisespec_inputs(&sys).unwrap_err()), "noisespec.deltas_s");
    }
}
