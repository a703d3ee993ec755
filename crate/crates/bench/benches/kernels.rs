use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use stl_bench::wide_batch;
use stl_core::bench::kernels;
use stl_core::fast_log::{Log2Mode, DEFAULT_LUT_SIZE};

fn activation_values(c: &mut Criterion) {
    let (xs, xs32) = wide_batch(7);
    let mut out = vec![0.0f64; xs.len()];
    let mut out32 = vec![0.0f32; xs.len()];
    let lut = Log2Mode::lut(DEFAULT_LUT_SIZE).unwrap();
    let poly = Log2Mode::Polynomial;

    let mut group = c.benchmark_group("value");
    group.bench_function("relu", |b| {
        b.iter(|| kernels::relu(black_box(&xs), &mut out))
    });
    group.bench_function("softsign", |b| {
        b.iter(|| kernels::softsign(black_box(&xs), &mut out))
    });
    group.bench_function("stl-exact", |b| {
        b.iter(|| kernels::stl_exact(black_box(&xs), &mut out))
    });
    let mut fast_poly = kernels::stl_fast(&poly);
    group.bench_function("stl-fast-poly", |b| {
        b.iter(|| fast_poly(black_box(&xs32), &mut out32))
    });
    let mut fast_lut = kernels::stl_fast(&lut);
    group.bench_function("stl-fast-lut", |b| {
        b.iter(|| fast_lut(black_box(&xs32), &mut out32))
    });
    group.finish();
}

fn activation_grads(c: &mut Criterion) {
    let (xs, xs32) = wide_batch(7);
    let mut out = vec![0.0f64; xs.len()];
    let mut out32 = vec![0.0f32; xs.len()];

    let mut group = c.benchmark_group("gradient");
    group.bench_function("relu", |b| {
        b.iter(|| kernels::relu_grad(black_box(&xs), &mut out))
    });
    group.bench_function("softsign", |b| {
        b.iter(|| kernels::softsign_grad(black_box(&xs), &mut out))
    });
    group.bench_function("stl-exact", |b| {
        b.iter(|| kernels::stl_exact_grad(black_box(&xs), &mut out))
    });
    group.bench_function("stl-f32", |b| {
        b.iter(|| kernels::stl_f32_grad(black_box(&xs32), &mut out32))
    });
    group.finish();
}

criterion_group!(benches, activation_values, activation_grads);
criterion_main!(benches);
