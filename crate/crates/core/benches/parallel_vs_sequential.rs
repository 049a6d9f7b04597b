//! Sequential vs. data-parallel execution of the three heavy workloads.
//! Without the `parallel` feature both modes run sequentially.

use certibus::driver_stack::{DriverConfig, Registry};
use certibus::flight_sim::{run_trials, SimConfig, Variant};
use certibus::harness::bounded::verified_bounded_response;
use certibus::harness::{run_all, RunOptions};
use certibus::ExecMode;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn refinement_checks(c: &mut Criterion) {
    let reg = Registry::shipped(DriverConfig::default());
    let mut g = c.benchmark_group("refinement_checks");
    g.sample_size(10);
    for (name, mode) in MODES {
        let opts = RunOptions { budget: Some(20_000), mode, ..RunOptions::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(run_all(&reg, opts).unwrap()))
        });
    }
    g.finish();
}

fn bounded_response(c: &mut Criterion) {
    let reg = Registry::shipped(DriverConfig::default());
    let mut g = c.benchmark_group("bounded_response_len12");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(verified_bounded_response(&reg, 12, 0xA5, mode))));
    }
    g.finish();
}

fn flight_trials(c: &mut Criterion) {
    let cfg = SimConfig { duration_s: 10.0, ..SimConfig::default() };
    let mut g = c.benchmark_group("flight_trials_4x10s");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(run_trials(&cfg, &Variant::BOTH, 4, true, mode).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, refinement_checks, bounded_response, flight_trials);
criterion_main!(benches);
