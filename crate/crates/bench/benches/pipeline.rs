use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use metastab_bench::{dense_covariance, hopper_grid, ut_chain, ut_row};
use metastab_core::estimators::{monte_carlo_propagate, sigma_points, AugmentedBelief};
use metastab_core::linalg::matrix_sqrt;
use metastab_core::markov::{analyze_chain, spectrum};
use metastab_core::systems::{Hopper, HopperParams};
use metastab_core::NoiseSpec;
use nalgebra::DVector;

fn sigma(c: &mut Criterion) {
    let cov = dense_covariance(25);
    let belief = AugmentedBelief::from_moments(DVector::zeros(25), cov.clone(), 12).unwrap();
    c.bench_function("matrix_sqrt 25x25", |b| {
        b.iter(|| matrix_sqrt(black_box(&cov)).unwrap())
    });
    c.bench_function("sigma_points n=25", |b| {
        b.iter(|| sigma_points(black_box(&belief), 1.0 / 3.0).unwrap())
    });
}

fn hopper(c: &mut Criterion) {
    let hopper = Hopper::new(HopperParams::default()).unwrap();
    let grid = hopper_grid();
    let noise = NoiseSpec::scalar(0.05).unwrap();
    let x = DVector::from_element(1, 1.25);

    c.bench_function("hopper UT row", |b| {
        b.iter(|| ut_row(&hopper, &grid, &noise, black_box(180)).unwrap())
    });
    c.bench_function("hopper MC 1000 samples", |b| {
        b.iter(|| monte_carlo_propagate(&hopper, black_box(&x), &noise, 1000, 1).unwrap())
    });

    let chain = ut_chain(&hopper, &grid, &noise).unwrap();
    let mut g = c.benchmark_group("221-state chain");
    g.sample_size(20);
    g.bench_function("UT assembly", |b| {
        b.iter(|| ut_chain(&hopper, &grid, &noise).unwrap())
    });
    g.bench_function("spectrum k=4", |b| {
        b.iter(|| spectrum(black_box(&chain), 4).unwrap())
    });
    g.bench_function("full analysis", |b| {
        b.iter(|| analyze_chain(black_box(&chain)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sigma, hopper);
criterion_main!(benches);
