use fracmems::boundary::{asymptotic_window, decay_grid, fit_decay, probe_rho_min};
use fracmems::green::GreenOperator;
use fracmems::grid::{Geometry, GridFunction, GridSpec, RadialGrid};
use fracmems::operator::FracParams;
use fracmems::pullin::{bisect_pullin, LOWEST_LOAD};
use fracmems::solver::{MembraneProfile, MinimalSolver};
use fracmems::FracError;

fn green_on(grid: &RadialGrid, s: f64) -> GreenOperator {
    GreenOperator::new(grid, &FracParams::new(s, grid.geometry().dim()).unwrap()).unwrap()
}

fn interval(s: f64, nodes: usize) -> GreenOperator {
    green_on(&GridSpec::for_order(Geometry::Interval, nodes, s).build().unwrap(), s)
}

/// Linear interpolation in boundary distance, valid on symmetric interval grids.
fn at_distance(grid: &RadialGrid, u: &GridFunction, d: f64) -> f64 {
    let pts: Vec<(f64, f64)> = grid
        .boundary_distances()
        .iter()
        .zip(&u.values)
        .zip(grid.nodes())
        .filter(|(_, x)| **x >= 0.0)
        .map(|((d, v), _)| (*d, *v))
        .collect();
    let mut best = (f64::INFINITY, 0.0);
    for w in pts.windows(2) {
        let ((d0, v0), (d1, v1)) = (w[0], w[1]);
        let (lo, hi) = (d0.min(d1), d0.max(d1));
        if d >= lo && d <= hi && hi > lo {
            return v0 + (v1 - v0) * (d - d0) / (d1 - d0);
        }
        let gap = (d0 - d).abs();
        if gap < best.0 {
            best = (gap, v0);
        }
    }
    best.1
}

#[test]
fn pullin_jumps_above_the_critical_exponent() {
    let s = 0.75;
    let critical = 2.0 * s / 3.0;
    let green = interval(s, 96);
    let profile = MembraneProfile::semi_sphere(1.0, critical).unwrap();
    let p = bisect_pullin(&MinimalSolver::new(&green, &profile), &profile, (0.01, 0.1), 1e-3).unwrap();
    assert!(p.lambda_lo > 1e-3, "{}", p.lambda_lo);

    let gamma = critical + 0.05 * s;
    let grid = GridSpec::for_order(Geometry::Radial { dim: 1 }, 96, s)
        .with_rho_min(probe_rho_min(s, gamma, LOWEST_LOAD))
        .build()
        .unwrap();
    let green = green_on(&grid, s);
    let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
    match bisect_pullin(&MinimalSolver::new(&green, &profile), &profile, (0.01, 0.1), 1e-3) {
        Err(FracError::BracketExhausted { lowest }) => assert!(lowest <= 1e-9),
        other => panic!("expected an exhausted bracket, got {:?}", other.map(|p| p.lambda_lo)),
    }
}

#[test]
fn refinement_moves_the_solution_little() {
    let (s, gamma) = (0.6, 0.3);
    let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
    let coarse = interval(s, 96);
    let solver = MinimalSolver::new(&coarse, &profile);
    let lambda = 0.5 * bisect_pullin(&solver, &profile, (0.01, 0.1), 1e-3).unwrap().lambda_lo;
    let u = solver.iterate(lambda).unwrap().solution;
    let fine = interval(s, 192);
    let v = MinimalSolver::new(&fine, &profile).iterate(lambda).unwrap().solution;
    let mut worst: f64 = 0.0;
    for d in [0.02, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let (a, b) = (at_distance(coarse.grid(), &u, d), at_distance(fine.grid(), &v, d));
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 0.05 * v.sup_norm(), "{worst} vs {}", v.sup_norm());
}

#[test]
fn bisection_is_deterministic() {
    let green = interval(0.5, 64);
    let profile = MembraneProfile::semi_sphere(0.8, 0.25).unwrap();
    let solver = MinimalSolver::new(&green, &profile);
    let a = bisect_pullin(&solver, &profile, (0.005, 0.05), 1e-4).unwrap();
    let b = bisect_pullin(&solver, &profile, (0.005, 0.05), 1e-4).unwrap();
    assert_eq!(a.lambda_lo.to_bits(), b.lambda_lo.to_bits());
    assert_eq!(a.lambda_hi.to_bits(), b.lambda_hi.to_bits());
    assert_eq!(a.evaluations, b.evaluations);
}

#[test]
fn log_correction_appears_only_at_half_order() {
    let s = 0.5;
    for (frac, expected) in [(0.4, false), (0.5, true), (0.6, false)] {
        let gamma = frac * s;
        let grid = decay_grid(96, s).unwrap();
        let green = green_on(&grid, s);
        let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
        let solver = MinimalSolver::new(&green, &profile);
        let p = bisect_pullin(&solver, &profile, (0.02, 0.2), 1e-3).unwrap();
        let run = solver.iterate(0.3 * p.midpoint()).unwrap();
        let fit = fit_decay(&grid, &run.solution, s, gamma, asymptotic_window(&grid)).unwrap();
        assert_eq!(fit.log_flag, expected, "gamma = {frac}s: {fit:?}");
        assert!(fit.valid());
    }
}
