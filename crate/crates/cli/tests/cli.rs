// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinctl_cli::{import_pulse, RunConfig};
use spinctl_core::objective::Objective;
use spinctl_core::{tasks, RfiDistribution, SpinSystem};
use tempfile::TempDir;

const X_PI: &str = r#"
seed = 4
[system]
offsets_hz = [0.0]
[task]
type = "gate"
target = { selective_pi = 0 }
[pulse]
duration_s = 1e-3
segments = 10
init_amplitude_rad_s = 314.159
[optimizer]
algorithm = "GRAPE"
epsilon = 1e7
max_iters = 500
target_fidelity = 0.999
"#;

const TCP: &str = r#"
seed = 9
[system]
offsets_hz = [0.0, 127.4]
couplings_hz = [8.8]
"#;

fn spinctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinctl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    spinctl(&args)
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// CSV text with the named column removed.
fn without_column(path: &Path, column: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column);
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != idx)
                .map(|(_, v)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn tiny_gate_reaches_target() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "x.toml", X_PI);
    let out = dir.path().join("run");
    ok(&run("optimize", &cfg, &out, &[]));
    for f in ["pulse.shape", "trace.csv", "result.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let result = json(&out.join("result.json"));
    assert!(result["final_fidelity"].as_f64().unwrap() >= 0.999, "{result}");
    assert_eq!(result["stop_reason"], "target_reached");
    assert_eq!(result["seed"], 4);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["config"]["optimizer"]["gamma"], 0.99);
    assert_eq!(manifest["config"]["seed"], 4);
}

#[test]
fn optimize_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "x.toml", &X_PI.replace("\"GRAPE\"", "\"SAGRAPE\"\nkappa = 5"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run("optimize", &cfg, &a, &["--seed", "21"]));
    ok(&run("optimize", &cfg, &b, &["--seed", "21"]));
    assert_eq!(fs::read(a.join("pulse.shape")).unwrap(), fs::read(b.join("pulse.shape")).unwrap());
    assert_eq!(fs::read(a.join("result.json")).unwrap(), fs::read(b.join("result.json")).unwrap());
    assert_eq!(
        without_column(&a.join("trace.csv"), "elapsed_s"),
        without_column(&b.join("trace.csv"), "elapsed_s")
    );
    let c = dir.path().join("c");
    ok(&run("optimize", &cfg, &c, &["--seed", "22"]));
    assert_ne!(fs::read(a.join("pulse.shape")).unwrap(), fs::read(c.join("pulse.shape")).unwrap());
}

#[test]
fn bad_probabilities_name_the_key() {
    let dir = TempDir::new().unwrap();
    let text = format!("{X_PI}[rfi]\nscales = [0.9, 1.1]\nprobs = [0.5, 0.4]\n");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = dir.path().join("run");
    let o = run("optimize", &cfg, &out, &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("rfi.probs"));
    assert!(!out.exists(), "no partial run on a config error");
}

#[test]
fn unknown_key_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &X_PI.replace("max_iters", "max_iter"));
    let o = run("validate", &cfg, &dir.path().join("run"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_iter"));
}

#[test]
fn validate_echoes_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "x.toml", X_PI);
    let o = run("validate", &cfg, &dir.path().join("run"), &["--seed", "77"]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let echoed = RunConfig::from_toml_str(&text, dir.path()).unwrap();
    assert_eq!(echoed.seed, 77);
    assert!(text.contains("neighbor_scale_hz"));
    assert!(text.contains("scales = [1.0]"));
}

#[test]
fn noisespec_single_delay() {
    let dir = TempDir::new().unwrap();
    let text = r#"
[system]
offsets_hz = [0.0]
[noise]
model = "ornstein_uhlenbeck"
sigma_hz = 20.0
tau_c_s = 1e-3
dt_s = 5e-5
[noisespec]
deltas_s = [5e-3]
trials = 50
max_echoes = 50
"#;
    let cfg = write_config(dir.path(), "ns.toml", text);
    let out = dir.path().join("run");
    ok(&run("noisespec", &cfg, &out, &[]));
    let mut r = csv::Reader::from_path(out.join("spectroscopy.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["delta_s", "nu_hz", "t2_s", "s_per_s", "fit_ok"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 100.0);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["resolved"]["protocol"]["trials"], 50);
}

#[test]
fn benchmark_groups_and_jobs_agree() {
    let dir = TempDir::new().unwrap();
    let text = X_PI.replace("max_iters = 500", "max_iters = 100000\nkappa = 3\nmax_evals = 40.0")
        .replace("target_fidelity = 0.999", "target_fidelity = 1.0")
        + "[benchmark]\nalgorithms = [\"GRAPE\", \"SAGRAPE\"]\ntrials = 2\ncurve_points = 5\n";
    let cfg = write_config(dir.path(), "b.toml", &text);
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    ok(&run("benchmark", &cfg, &one, &["--jobs", "1"]));
    ok(&run("benchmark", &cfg, &two, &["--jobs", "2"]));

    let rows = without_column(&one.join("convergence.csv"), "wallclock_s");
    let mut groups: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    groups.dedup();
    assert_eq!(groups.len(), 4, "{groups:?}");
    assert_eq!(
        groups.iter().map(|g| g.0.as_str()).collect::<Vec<_>>(),
        ["GRAPE", "GRAPE", "SAGRAPE-3", "SAGRAPE-3"]
    );
    assert_eq!(rows, without_column(&two.join("convergence.csv"), "wallclock_s"));
    assert_eq!(fs::read(one.join("curves.csv")).unwrap(), fs::read(two.join("curves.csv")).unwrap());
    assert_eq!(fs::read(one.join("summary.json")).unwrap(), fs::read(two.join("summary.json")).unwrap());
    let curves = without_column(&one.join("curves.csv"), "stderr");
    assert_eq!(curves.len(), 10);
}

#[test]
fn export_round_trip() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{TCP}[pulse]\nduration_s = 79e-3\nsegments = 250\n[pulse.cpmg]\nn_pulses = 6\npi_amplitude_rad_s = 9941.0\n"
    );
    let cfg_path = write_config(dir.path(), "e.toml", &text);
    let out = dir.path().join("run");
    ok(&run("export", &cfg_path, &out, &[]));
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let expected = cfg.initial_pulse().unwrap();
    let got = import_pulse(&out.join("pulse.shape")).unwrap();
    assert_eq!(got.frozen(), expected.frozen());
    assert_eq!(got.tau(), expected.tau());
    for j in 0..expected.segments() {
        let (a, b) = (expected.amplitude(j), got.amplitude(j));
        assert!(((a - b) / a).abs() < 1e-15, "segment {j}: {a} vs {b}");
    }

    // the exported file drives a second run unchanged
    let reuse = format!(
        "{TCP}[pulse]\nduration_s = 79e-3\nsegments = 250\ninitial = \"file\"\nfile = \"run/pulse.shape\"\n"
    );
    let reuse_cfg = RunConfig::from_toml_str(&reuse, dir.path()).unwrap();
    assert_eq!(reuse_cfg.initial_pulse().unwrap().frozen(), expected.frozen());
}

#[test]
fn robustness_at_zero_noise_is_noiseless_fidelity() {
    let dir = TempDir::new().unwrap();
    let export_cfg = write_config(
        dir.path(),
        "e.toml",
        &format!("{TCP}[pulse]\nduration_s = 20e-3\nsegments = 40\ninit_amplitude_rad_s = 300.0\n"),
    );
    ok(&run("export", &export_cfg, &dir.path().join("p"), &[]));
    let text = format!(
        "{TCP}[noise]\nmodel = \"uniform\"\ndt_s = 1e-3\n[robustness]\npulses = [{{ label = \"P\", file = \"p/pulse.shape\" }}]\nstrengths_hz = [0.0]\ntrials = 20\n"
    );
    let cfg = write_config(dir.path(), "r.toml", &text);
    let out = dir.path().join("run");
    ok(&run("robustness", &cfg, &out, &[]));
    let rows = without_column(&out.join("robustness.csv"), "pulse_label");
    assert_eq!(rows.len(), 1);
    let mean: f64 = rows[0][1].parse().unwrap();

    let sys = SpinSystem::from_hz(&[0.0, 127.4], &[8.8]).unwrap();
    let objective = Objective::new(&sys, tasks::lls_transfer().unwrap(), RfiDistribution::homogeneous()).unwrap();
    let pulse = import_pulse(&dir.path().join("p/pulse.shape")).unwrap();
    let phi = objective.fidelity(&pulse, &[]).unwrap();
    assert!((mean - phi).abs() < 1e-12, "{mean} vs {phi}");
}

#[test]
fn missing_config_file() {
    let o = spinctl(&["optimize", "--config", "/nonexistent/spinctl.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/spinctl.toml"));
}
