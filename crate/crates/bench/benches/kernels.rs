use std::hint::black_box;

use aniso_bench::{smooth_problem, square_grid, wavy_field};
use aniso_core::grid::ball_stats;
use aniso_core::solver::{energy, energy_gradient};
use aniso_core::verify::moser_schedule;
use aniso_core::{solve, DualNorm, NormModel, SolverOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("norm");
    let x = [0.3, -0.2];
    let xi = [1.2, -0.7];
    for (name, norm) in [
        ("euclidean", NormModel::euclidean(2, 1.0).unwrap()),
        ("ellp4", NormModel::ell_p(2, 4.0).unwrap()),
        ("rotated_ellp4", NormModel::rotated_ell_p_2d(4.0, 0.5).unwrap()),
    ] {
        group.bench_function(BenchmarkId::new("flux", name), |b| {
            b.iter(|| norm.flux(black_box(2.5), black_box(&x), black_box(&xi)).unwrap())
        });
        let analytic = DualNorm::analytic(norm.clone());
        group.bench_function(BenchmarkId::new("dual_analytic", name), |b| {
            b.iter(|| analytic.eval(black_box(&x), black_box(&xi)).unwrap())
        });
        let numeric = DualNorm::numeric(norm.clone());
        group.bench_function(BenchmarkId::new("dual_numeric", name), |b| {
            b.iter(|| numeric.eval(black_box(&x), black_box(&xi)).unwrap())
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for cells in [32, 64] {
        let problem = smooth_problem(cells, 3.0, NormModel::ell_p(2, 4.0).unwrap());
        let u = wavy_field(problem.grid());
        group.bench_with_input(BenchmarkId::new("energy", cells), &cells, |b, _| {
            b.iter(|| energy(black_box(&problem), black_box(&u)))
        });
        group.bench_with_input(BenchmarkId::new("gradient", cells), &cells, |b, _| {
            b.iter(|| energy_gradient(black_box(&problem), black_box(&u)))
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (name, norm, gamma) in [
        ("euclidean_g2", NormModel::euclidean(2, 1.0).unwrap(), 2.0),
        ("ellp4_g3", NormModel::ell_p(2, 4.0).unwrap(), 3.0),
    ] {
        let problem = smooth_problem(32, gamma, norm);
        group.bench_function(name, |b| {
            b.iter(|| solve(black_box(&problem), &SolverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let grid = square_grid(64);
    let u = wavy_field(&grid);
    c.bench_function("ball_stats_r0.4", |b| {
        b.iter(|| ball_stats(black_box(&u), black_box(&[0.1, -0.05]), black_box(0.4), f64::INFINITY).unwrap())
    });
    c.bench_function("moser_schedule_k50", |b| {
        b.iter(|| moser_schedule(black_box(3), black_box(2.0), 50).unwrap())
    });
}

criterion_group!(benches, norms, assembly, solver, verification);
criterion_main!(benches);
