//! Shared fixtures for the benchmarks.

use fracmems::{FracParams, Geometry, GreenOperator, GridSpec, MembraneProfile};

/// Green operator on the graded interval grid.
pub fn interval(s: f64, nodes: usize) -> GreenOperator {
    let grid = GridSpec::for_order(Geometry::Interval, nodes, s).build().expect("grid");
    GreenOperator::new(&grid, &FracParams::new(s, 1).expect("params")).expect("operator")
}

pub fn semi_sphere(gamma: f64) -> MembraneProfile {
    MembraneProfile::semi_sphere(1.0, gamma).expect("profile")
}
