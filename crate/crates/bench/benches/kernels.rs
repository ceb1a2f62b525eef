//! Benchmarks for the hot kernels: concentrated quadrature, system
//! assembly, and one implicit-explicit time step.

use criterion::{criterion_group, criterion_main, Criterion};
use oscistrip_core::fem::{generate_disk_mesh, FemSystem, Nonlinearity};
use oscistrip_core::quad::{conc_integral, QuadSpec, ScalarField};
use oscistrip_core::semiflow::step_imex;
use oscistrip_core::{Curve, Profile, StripRegion};
use std::hint::black_box;
use std::sync::Arc;

fn bench_conc_integral(c: &mut Criterion) {
    let curve = Curve::circle(1.0).unwrap();
    let region = StripRegion::new(curve, Profile::TwoPlusCos, 0.1).unwrap();
    let phi = ScalarField::smooth(|x, y| x * y);
    let spec = QuadSpec::default();
    c.bench_function("conc_integral xy (eps = 0.1)", |b| {
        b.iter(|| conc_integral(black_box(&region), &phi, &phi, &spec).unwrap())
    });
}

fn bench_assembly(c: &mut Criterion) {
    let curve = Curve::circle(1.0).unwrap();
    let region = StripRegion::new(curve, Profile::TwoPlusCos, 0.1).unwrap();
    let mesh = Arc::new(generate_disk_mesh(1.0, 0.15, 0.02).unwrap());
    let v = ScalarField::constant(1.0);
    c.bench_function("strip system assembly", |b| {
        b.iter(|| {
            FemSystem::strip(mesh.clone(), &region, &v, 1.0, Nonlinearity::CutoffCubic).unwrap()
        })
    });
    c.bench_function("boundary system assembly", |b| {
        b.iter(|| {
            FemSystem::boundary(mesh.clone(), &Profile::TwoPlusCos, &v, 1.0,
                Nonlinearity::CutoffCubic)
            .unwrap()
        })
    });
}

fn bench_step(c: &mut Criterion) {
    let curve = Curve::circle(1.0).unwrap();
    let region = StripRegion::new(curve, Profile::TwoPlusCos, 0.1).unwrap();
    let mesh = Arc::new(generate_disk_mesh(1.0, 0.15, 0.02).unwrap());
    let v = ScalarField::constant(1.0);
    let fem = FemSystem::strip(mesh, &region, &v, 1.0, Nonlinearity::CutoffCubic).unwrap();
    let u: Vec<f64> = fem.mesh.vertices.iter().map(|p| 0.5 + p[0] * 0.1).collect();
    // Prime the cached time-step factorization so the bench isolates the
    // solve itself.
    let _ = step_imex(&fem, &u, 1e-3).unwrap();
    c.bench_function("imex step (factor cached)", |b| {
        b.iter(|| step_imex(black_box(&fem), &u, 1e-3).unwrap())
    });
}

criterion_group!(kernels, bench_conc_integral, bench_assembly, bench_step);
criterion_main!(kernels);
