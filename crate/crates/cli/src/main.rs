// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinctl_cli::commands::{self, load_config};
use spinctl_cli::CliError;

#[derive(Parser)]
#[command(name = "spinctl", version, about = "Robust NMR pulse optimization and dephasing simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a pulse (GRAPE, SAGRAPE or RSAGRAPE).
    Optimize(Common),
    /// Convergence benchmark over algorithms and seeds.
    Benchmark(Common),
    /// CPMG noise spectroscopy.
    Noisespec(Common),
    /// Singlet-order robustness of stored pulses under z-noise.
    Robustness(Common),
    /// Write the configured starting pulse as a shape file.
    Export(Common),
    /// Parse and validate a config, printing it with defaults filled in.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for benchmark trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Optimize(c) => ("optimize", c),
        Command::Benchmark(c) => ("benchmark", c),
        Command::Noisespec(c) => ("noisespec", c),
        Command::Robustness(c) => ("robustness", c),
        Command::Export(c) => ("export", c),
        Command::Validate(c) => ("validate", c),
    };
    let cfg = load_config(&common.config, common.out.as_deref(), common.seed)?;
    match name {
        "optimize" => {
            let s = commands::optimize(&cfg)?;
            println!(
                "{}: fidelity {:.6} ({:.6} of bound {:.6}), {} after {} iterations",
                s.algorithm, s.final_fidelity, s.normalized_fidelity, s.bound, s.stop_reason, s.iterations
            );
        }
        "benchmark" => {
            for s in commands::benchmark(&cfg, common.jobs.max(1))? {
                println!(
                    "{}: mean final infidelity {:.3e} ± {:.1e} over {} trials",
                    s.algorithm, s.mean_final_infidelity, s.stderr, s.trials
                );
            }
        }
        "noisespec" => {
            for r in commands::noisespec(&cfg)?.rows {
                println!("nu {:.4} Hz: T2 {:.4e} s, S {:.4e} /s{}", r.nu_hz, r.t2_s, r.s_per_s, if r.fit_ok { "" } else { " (flagged)" });
            }
        }
        "robustness" => {
            for r in commands::robustness(&cfg)? {
                println!("{} @ {} Hz: {:.4} ± {:.4}", r.pulse_label, r.noise_strength, r.mean_order, r.stderr);
            }
        }
        "export" => println!("{}", commands::export(&cfg)?.display()),
        _ => print!("{}", commands::validate(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
