use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fracmems::green::BallKernel;
use fracmems::grid::{Geometry, GridSpec};
use fracmems::operator::{FracParams, OperatorMatrix};
use fracmems::psi::{psi, psi_prime};

fn bench_psi(c: &mut Criterion) {
    let mut g = c.benchmark_group("psi");
    for tau in [0.2, 0.5, 0.9] {
        g.bench_with_input(BenchmarkId::new("value", tau), &tau, |b, &t| b.iter(|| psi(0.5, black_box(t), 1e-10).unwrap()));
    }
    g.bench_function("derivative", |b| b.iter(|| psi_prime(0.75, black_box(0.6), 1e-10).unwrap()));
    g.finish();
}

fn bench_kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("ball_kernel");
    for dim in [1, 2, 3] {
        let k = BallKernel::new(dim, 0.6);
        g.bench_with_input(BenchmarkId::new("point", dim), &k, |b, k| b.iter(|| k.point(black_box(0.3), 0.5, 0.8)));
    }
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    for (geometry, nodes) in [(Geometry::Interval, 128), (Geometry::Radial { dim: 2 }, 64)] {
        let grid = GridSpec::for_order(geometry, nodes, 0.5).build().unwrap();
        let params = FracParams::new(0.5, geometry.dim()).unwrap();
        g.bench_function(format!("{geometry:?}/{nodes}"), |b| b.iter(|| OperatorMatrix::assemble(&grid, &params).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_psi, bench_kernel, bench_assembly);
criterion_main!(benches);
