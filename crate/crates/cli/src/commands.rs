// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command implementations. Each command validates the whole config before
//! doing any work, writes its artifacts into the output directory and
//! finishes with `manifest.json`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::Serialize;
use serde_json::json;
use spinctl_core::hybrid::OptimizerConfig;
use spinctl_core::simulate::{
    benchmark_jobs, noise_spectrum, robustness_scan, run_job, select_epsilon, write_convergence_csv,
    write_curve_csv, write_robustness_csv, write_spectroscopy_csv, BenchmarkJob, BenchmarkRun, McEstimate,
};
use spinctl_core::{optimize_observed, BenchmarkResult, BenchmarkSpec, Objective};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::shape::{export_pulse, ShapeError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] spinctl_core::Error),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("{path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }

    fn output(path: &Path, e: impl ToString) -> Self {
        Self::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Loads a config and applies command-line overrides.
pub fn load_config(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::output(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    fs::write(path, text + "\n").map_err(|e| CliError::output(path, e))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    jobs: usize,
    resolved: serde_json::Value,
    artifacts: &[&str],
) -> Result<()> {
    let manifest = json!({
        "tool": "spinctl",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed,
        "jobs": jobs,
        "config": cfg,
        "resolved": resolved,
        "artifacts": artifacts,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

/// Outcome of `optimize`, mirrored in `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeSummary {
    pub algorithm: String,
    pub final_fidelity: f64,
    pub normalized_fidelity: f64,
    pub bound: f64,
    pub stop_reason: String,
    pub iterations: usize,
    pub fidelity_evals: usize,
    pub gradient_evals: usize,
    pub evals: f64,
    pub epsilon: f64,
    pub seed: u64,
}

fn resolve_epsilon(cfg: &RunConfig, objective: &Objective, oc: &mut OptimizerConfig, start: &spinctl_core::PulseSequence) -> Result<()> {
    if cfg.epsilon_is_auto() {
        oc.epsilon = select_epsilon(objective, start, &cfg.optimizer.epsilon_grid, cfg.optimizer.epsilon_probe_iters)?;
    }
    Ok(())
}

/// Writes `trace.csv` (streamed, so it survives a failure), `pulse.shape`,
/// `result.json` and `manifest.json`.
pub fn optimize(cfg: &RunConfig) -> Result<OptimizeSummary> {
    let sys = cfg.spin_system()?;
    let objective = Objective::new(&sys, cfg.task(&sys)?, cfg.rfi()?)?;
    let pulse0 = cfg.initial_pulse()?;
    let mut oc = cfg.optimizer()?;
    resolve_epsilon(cfg, &objective, &mut oc, &pulse0)?;

    let dir = output_dir(cfg)?;
    let trace_path = dir.join("trace.csv");
    let mut trace = csv::Writer::from_path(&trace_path).map_err(|e| CliError::output(&trace_path, e))?;
    trace
        .write_record(["iteration", "elapsed_s", "evals", "fidelity", "normalized_fidelity"])
        .map_err(|e| CliError::output(&trace_path, e))?;
    let bound = objective.bound();
    let mut write_error = None;
    let outcome = optimize_observed(&objective, &pulse0, &oc, |p| {
        if write_error.is_some() {
            return;
        }
        let row = [
            p.iteration.to_string(),
            p.elapsed_s.to_string(),
            p.evals.to_string(),
            p.fidelity.to_string(),
            (p.fidelity / bound).to_string(),
        ];
        if let Err(e) = trace.write_record(row).and_then(|_| trace.flush().map_err(Into::into)) {
            write_error = Some(e);
        }
    });
    trace.flush().map_err(|e| CliError::output(&trace_path, e))?;
    if let Some(e) = write_error {
        return Err(CliError::output(&trace_path, e));
    }
    let result = outcome?;

    export_pulse(&result.best_pulse, &dir.join("pulse.shape"))?;
    let summary = OptimizeSummary {
        algorithm: result.config.algorithm.name().to_string(),
        final_fidelity: result.final_fidelity,
        normalized_fidelity: result.normalized_fidelity(),
        bound: result.bound,
        stop_reason: result.stop_reason.as_str().to_string(),
        iterations: result.trace.len(),
        fidelity_evals: result.fidelity_evals,
        gradient_evals: result.gradient_evals,
        evals: result.total_evals(),
        epsilon: oc.epsilon,
        seed: cfg.seed,
    };
    write_json(&dir.join("result.json"), &summary)?;
    write_manifest(
        &dir,
        "optimize",
        cfg,
        1,
        json!({ "epsilon": oc.epsilon, "optimizer": oc }),
        &["trace.csv", "pulse.shape", "result.json"],
    )?;
    Ok(summary)
}

/// Runs `jobs` on up to `workers` threads; results come back in job order
/// whatever the scheduling.
pub fn run_jobs(objective: &Objective, jobs: &[BenchmarkJob], workers: usize) -> Result<Vec<BenchmarkRun>> {
    let workers = workers.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<spinctl_core::Result<BenchmarkRun>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let run = run_job(objective, job);
                *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(run);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|p| p.into_inner())
                .expect("every job slot is filled")
                .map_err(CliError::from)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub trials: usize,
    pub mean_final_infidelity: f64,
    pub stderr: f64,
}

/// Writes `convergence.csv`, `curves.csv`, `summary.json` and
/// `manifest.json`.
pub fn benchmark(cfg: &RunConfig, workers: usize) -> Result<Vec<AlgorithmSummary>> {
    let b = cfg.benchmark.as_ref().ok_or(ConfigError::Missing("benchmark"))?;
    let p = cfg.pulse.as_ref().ok_or(ConfigError::Missing("pulse"))?;
    let sys = cfg.spin_system()?;
    let objective = Objective::new(&sys, cfg.task(&sys)?, cfg.rfi()?)?;
    let base = cfg.optimizer()?;
    let algorithms: Vec<OptimizerConfig> = b
        .algorithms
        .iter()
        .map(|&algorithm| OptimizerConfig { algorithm, ..base.clone() })
        .collect();
    let spec = BenchmarkSpec {
        segments: p.segments,
        duration_s: p.duration_s,
        init_amplitude: p.init_amplitude_rad_s,
        trials: b.trials,
        seed: cfg.seed,
    };
    let mut jobs = benchmark_jobs(&algorithms, &spec)?;
    for job in &mut jobs {
        job.pulse0 = cfg.initial_pulse_for_seed(job.config.seed)?;
    }
    let mut epsilon = base.epsilon;
    if cfg.epsilon_is_auto() {
        let mut probe = base.clone();
        resolve_epsilon(cfg, &objective, &mut probe, &jobs[0].pulse0)?;
        epsilon = probe.epsilon;
        for job in &mut jobs {
            job.config.epsilon = epsilon;
        }
    }

    let result = BenchmarkResult {
        runs: run_jobs(&objective, &jobs, workers)?,
    };

    let dir = output_dir(cfg)?;
    let conv = dir.join("convergence.csv");
    write_convergence_csv(create(&conv)?, &result).map_err(|e| CliError::output(&conv, e))?;

    let max_evals = result
        .runs
        .iter()
        .filter_map(|r| r.result.trace.last().map(|t| t.evals))
        .fold(0.0, f64::max);
    let points = b.curve_points;
    let grid: Vec<f64> = (0..points).map(|i| max_evals * i as f64 / (points - 1) as f64).collect();
    let labels = result.labels();
    let curves: Vec<_> = labels.iter().map(|l| (l.clone(), result.mean_curve(l, &grid))).collect();
    let curve_path = dir.join("curves.csv");
    write_curve_csv(create(&curve_path)?, &curves).map_err(|e| CliError::output(&curve_path, e))?;

    let summaries: Vec<AlgorithmSummary> = labels
        .iter()
        .map(|l| {
            let est = McEstimate::from_samples(&result.final_infidelities(l));
            AlgorithmSummary {
                algorithm: l.clone(),
                trials: est.trials,
                mean_final_infidelity: est.mean,
                stderr: est.stderr,
            }
        })
        .collect();
    write_json(&dir.join("summary.json"), &summaries)?;
    write_manifest(
        &dir,
        "benchmark",
        cfg,
        workers,
        json!({ "epsilon": epsilon, "algorithms": algorithms.iter().map(|a| OptimizerConfig { epsilon, ..a.clone() }).collect::<Vec<_>>() }),
        &["convergence.csv", "curves.csv", "summary.json"],
    )?;
    Ok(summaries)
}

/// Writes `spectroscopy.csv` and `manifest.json`.
pub fn noisespec(cfg: &RunConfig) -> Result<spinctl_core::SpectroscopyResult> {
    let sys = cfg.spin_system()?;
    let (pi, deltas, protocol) = cfg.noisespec_inputs(&sys)?;
    let noise = cfg.noise_model()?;
    let result = noise_spectrum(&sys, &pi, &deltas, &noise, &protocol)?;
    let dir = output_dir(cfg)?;
    let path = dir.join("spectroscopy.csv");
    write_spectroscopy_csv(create(&path)?, &result).map_err(|e| CliError::output(&path, e))?;
    write_manifest(
        &dir,
        "noisespec",
        cfg,
        1,
        json!({ "noise": noise, "protocol": protocol, "pi_pulse": pi }),
        &["spectroscopy.csv"],
    )?;
    Ok(result)
}

/// Writes `robustness.csv` and `manifest.json`.
pub fn robustness(cfg: &RunConfig) -> Result<Vec<spinctl_core::RobustnessRow>> {
    let sys = cfg.spin_system()?;
    let pulses = cfg.robustness_inputs(&sys)?;
    let r = cfg.robustness.as_ref().ok_or(ConfigError::Missing("robustness"))?;
    let noise = cfg.noise_model()?;
    let rows = robustness_scan(&sys, &pulses, &noise, &r.strengths_hz, r.storage_s, r.trials, cfg.seed)?;
    let dir = output_dir(cfg)?;
    let path = dir.join("robustness.csv");
    write_robustness_csv(create(&path)?, &rows).map_err(|e| CliError::output(&path, e))?;
    write_manifest(&dir, "robustness", cfg, 1, json!({ "noise": noise }), &["robustness.csv"])?;
    Ok(rows)
}

/// Writes the configured starting pulse as `pulse.shape`.
pub fn export(cfg: &RunConfig) -> Result<PathBuf> {
    let pulse = cfg.initial_pulse()?;
    let dir = output_dir(cfg)?;
    let path = dir.join("pulse.shape");
    export_pulse(&pulse, &path)?;
    write_manifest(&dir, "export", cfg, 1, json!({}), &["pulse.shape"])?;
    Ok(path)
}

/// The fully resolved config as TOML.
pub fn validate(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| CliError::output(Path::new("<stdout>"), e))
}
