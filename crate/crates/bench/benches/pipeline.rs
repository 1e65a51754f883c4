use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use errdom::biorth::pairing_matrix;
use errdom::dualnorm::oracle_dual_norm;
use errdom::estimators::{estimate, EstimatorFamily};
use errdom::fem::solve_galerkin;
use errdom::projection::discretized_residual;
use errdom::Region;
use errdom_bench::fixture;
use std::hint::black_box;

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_galerkin");
    for level in [1, 2, 3] {
        let (mesh, load, _) = fixture(level);
        group.bench_with_input(BenchmarkId::from_parameter(level), &level, |b, _| {
            b.iter(|| solve_galerkin(black_box(&mesh), &load).unwrap())
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let (_, load, u) = fixture(1);
    let mut group = c.benchmark_group("estimate");
    for family in EstimatorFamily::ALL {
        group.bench_function(family.name(), |b| b.iter(|| estimate(family, black_box(&load), &u).unwrap()));
    }
    group.finish();
}

fn projection_and_oracle(c: &mut Criterion) {
    let (mesh, load, u) = fixture(1);
    c.bench_function("discretized_residual", |b| b.iter(|| discretized_residual(black_box(&load), &u).unwrap()));
    c.bench_function("pairing_matrix", |b| b.iter(|| pairing_matrix(black_box(&mesh))));
    let z = mesh.interior_vertices().next().expect("interior vertex");
    c.bench_function("star_oracle_depth_3", |b| {
        b.iter(|| oracle_dual_norm(black_box(&load), &mesh, Region::Star(z), 3, 1).unwrap())
    });
}

criterion_group!(benches, solve, estimators, projection_and_oracle);
criterion_main!(benches);
