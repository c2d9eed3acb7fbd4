use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parisi_bench::{three_step_mixed, two_step_sk};
use parisi_core::quadrature::GaussHermite;
use parisi_core::{evaluate, phi00_only, solve_cascade, MinimizeOptions};
use std::hint::black_box;

fn gauss_hermite(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauss_hermite");
    for n in [64, 256, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| GaussHermite::compute(black_box(n)))
        });
    }
    g.finish();
}

fn cascade(c: &mut Criterion) {
    let mut g = c.benchmark_group("cascade");
    for (name, (mix, op, gamma, grid)) in [
        ("sk_2step", two_step_sk()),
        ("mixed_3step", three_step_mixed()),
    ] {
        g.bench_function(format!("solve/{name}"), |b| {
            b.iter(|| solve_cascade(&mix, &op, black_box(gamma), &grid).unwrap())
        });
        g.bench_function(format!("phi00/{name}"), |b| {
            b.iter(|| phi00_only(&mix, &op, black_box(gamma), &grid).unwrap())
        });
        g.bench_function(format!("evaluate/{name}"), |b| {
            b.iter(|| evaluate(&mix, &op, black_box(gamma), &grid).unwrap())
        });
    }
    g.finish();
}

fn minimize(c: &mut Criterion) {
    let (mix, _, gamma, _) = two_step_sk();
    let opts = MinimizeOptions::default();
    let mut g = c.benchmark_group("minimize");
    g.sample_size(10);
    g.bench_function("sk_k2", |b| {
        b.iter(|| parisi_core::minimize(&mix, black_box(gamma), 2, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, gauss_hermite, cascade, minimize);
criterion_main!(benches);
