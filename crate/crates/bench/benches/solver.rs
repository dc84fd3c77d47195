use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fracmems::pullin::bisect_pullin;
use fracmems::solver::MinimalSolver;
use fracmems::stability::{mu1, EigenSettings};
use fracmems_bench::{interval, semi_sphere};

fn bench_iteration(c: &mut Criterion) {
    let green = interval(0.6, 128);
    let profile = semi_sphere(0.4);
    let solver = MinimalSolver::new(&green, &profile);
    let mut g = c.benchmark_group("minimal_solver");
    g.sample_size(10);
    g.bench_function("iterate/128", |b| b.iter(|| solver.iterate(black_box(0.05)).unwrap()));
    g.bench_function("pullin/128", |b| b.iter(|| bisect_pullin(&solver, &profile, (0.05, 0.2), 1e-3).unwrap()));
    g.finish();
}

fn bench_eigen(c: &mut Criterion) {
    let green = interval(0.6, 128);
    let profile = semi_sphere(0.4);
    let solver = MinimalSolver::new(&green, &profile);
    let u = solver.iterate(0.05).unwrap().solution;
    let settings = EigenSettings::default();
    let mut g = c.benchmark_group("stability");
    g.sample_size(10);
    g.bench_function("mu1/128", |b| b.iter(|| mu1(&green, 0.05, &u, &solver.a, &settings).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_iteration, bench_eigen);
criterion_main!(benches);
