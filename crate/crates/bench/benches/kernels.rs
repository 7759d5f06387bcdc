//! Criterion benchmarks for the hot kernels: index computation on a random
//! pair, Jacobi transport across several conjugate points, assembly of a
//! circle table, exhaustive boundary enumeration, and a meridian lift.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::Vector3;
use std::f64::consts::PI;
use twistkit::floer::brute_force_soundness;
use twistkit::intersections::compute_circles;
use twistkit::maslov::{maslov_index_pair, MaslovOptions};
use twistkit::sampling::Sampler;
use twistkit::sphere::{sphere_jacobi_transport, Covector, Geodesic};
use twistkit::surgery::{figure_eight, lift_path, BranchedCover};
use twistkit::SymplecticSpace;

fn index_pair(c: &mut Criterion) {
    let opts = MaslovOptions::default();
    let space = SymplecticSpace::new(2).unwrap();
    let mut sampler = Sampler::new(17);
    let (a, b, _) = sampler.regular_pair(space, 1.4, &opts, 30).unwrap();
    c.bench_function("maslov index, one random pair (n = 2)", |bench| {
        bench.iter(|| maslov_index_pair(&a, &b, &opts).unwrap())
    });
}

fn jacobi_transport(c: &mut Criterion) {
    let xi = Covector::new(Vector3::x(), Vector3::y() * (5.0 * PI)).unwrap();
    c.bench_function("jacobi transport across radius 5 pi", |bench| {
        bench.iter_batched(
            || Geodesic::new(xi).unwrap(),
            |geo| sphere_jacobi_transport(&geo).unwrap().matrix(1.0),
            BatchSize::SmallInput,
        )
    });
}

fn circle_table(c: &mut Criterion) {
    c.bench_function("circle table assembly, winding parameter 3", |bench| {
        bench.iter(|| compute_circles(3).unwrap())
    });
}

fn boundary_enumeration(c: &mut Criterion) {
    c.bench_function("boundary operator enumeration, winding parameter 4", |bench| {
        bench.iter(|| brute_force_soundness(4).unwrap())
    });
}

fn meridian_lift(c: &mut Criterion) {
    let cover = BranchedCover::new(3).unwrap();
    let path = |s: f64| {
        let th = PI * s;
        figure_eight(&Vector3::new(th.cos(), th.sin(), 0.0)).unwrap()
    };
    let seed = cover.fiber_roots(&path(0.0))[0];
    c.bench_function("meridian lift through the order-4 cover", |bench| {
        bench.iter(|| lift_path(&cover, path, seed).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = index_pair, jacobi_transport, circle_table, boundary_enumeration, meridian_lift
}
criterion_main!(kernels);
