//! Parallel vs sequential execution of the data-parallel kernels.
//!
//! Build with `--no-default-features` to see the sequential fallback in
//! both arms.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tricert::certify::{sweep, MeshConfig, ProblemKind};
use tricert::eigsolve::SolverOptions;
use tricert::fem::{assemble_with, build_space, BoundaryCondition, Family};
use tricert::geometry::TriangleShape;
use tricert::mesh::uniform_subdivide;
use tricert::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    let mesh = uniform_subdivide(&TriangleShape::equilateral(), 128).unwrap();
    let space = build_space(&mesh, Family::Cr, BoundaryCondition::EdgeMean).unwrap();
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 128), &exec, |b, &exec| {
            b.iter(|| black_box(assemble_with(&space, exec).unwrap()))
        });
    }
    g.finish();
}

fn angle_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    let mesh = MeshConfig {
        cg_n: 24,
        cr_n: 24,
        equilateral_cg_n: 24,
    };
    let thetas: Vec<f64> = (1..=8).map(|i| 0.13 * i as f64).collect();
    let opts = SolverOptions::default();
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, thetas.len()), &exec, |b, &exec| {
            b.iter(|| black_box(sweep(ProblemKind::Dirichlet, &thetas, &mesh, &opts, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, angle_sweep);
criterion_main!(benches);
