// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use spinctl_core::hybrid::{rng_stream, STREAM_BENCH};
use spinctl_core::objective::Objective;
use spinctl_core::propagate::Dynamics;
use spinctl_core::{tasks, ControlTask, PulseSequence, RfiDistribution, SpinSystem};

fn two_spin() -> SpinSystem {
    SpinSystem::from_hz(&[0.0, 127.4], &[8.8]).unwrap()
}

fn three_spin() -> SpinSystem {
    SpinSystem::from_hz(&[-2000.0, 0.0, 2500.0], &[50.0, 30.0, 10.0]).unwrap()
}

fn segment(c: &mut Criterion) {
    for (name, sys) in [("2 spins", two_spin()), ("3 spins", three_spin())] {
        let dynamics = Dynamics::new(&sys).unwrap();
        c.bench_function(&format!("segment propagator, {name}"), |b| {
            b.iter(|| dynamics.segment(black_box(300.0), black_box(-120.0), 1.0, 0.0, 1e-4).unwrap())
        });
    }
}

fn objective(c: &mut Criterion) {
    let rfi = RfiDistribution::new(vec![0.9, 1.0, 1.1], vec![0.2, 0.6, 0.2]).unwrap();
    let lls = Objective::new(&two_spin(), tasks::lls_transfer().unwrap(), rfi.clone()).unwrap();
    let pulse = PulseSequence::random(250, 79e-3 / 250.0, 2.0 * PI * 50.0, &mut rng_stream(0, STREAM_BENCH)).unwrap();
    c.bench_function("LLS fidelity, 250 segments, 3 RF scales", |b| {
        b.iter(|| lls.fidelity(black_box(&pulse), &[]).unwrap())
    });
    c.bench_function("LLS fidelity and gradient, 250 segments, 3 RF scales", |b| {
        b.iter(|| lls.fidelity_and_gradient(black_box(&pulse), &[]).unwrap())
    });

    let task = ControlTask::gate(tasks::selective_pi(3, 0).unwrap()).unwrap();
    let gate = Objective::new(&three_spin(), task, rfi).unwrap();
    let pulse = PulseSequence::random(360, 1e-6, 2.0 * PI * 1000.0, &mut rng_stream(1, STREAM_BENCH)).unwrap();
    c.bench_function("3-spin gate fidelity and gradient, 360 segments", |b| {
        b.iter(|| gate.fidelity_and_gradient(black_box(&pulse), &[]).unwrap())
    });
}

criterion_group!(benches, segment, objective);
criterion_main!(benches);
