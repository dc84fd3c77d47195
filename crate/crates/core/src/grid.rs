//! Boundary-graded one-dimensional meshes and sampled fields.
//!
//! Every node stores its position together with its distance to the
//! boundary, computed independently so that boundary layers far below
//! machine epsilon (relative to 1) stay resolved.

use std::hash::{Hash, Hasher};

use crate::error::{FracError, Result};
use crate::special::sphere_area;

/// Geometry of the reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// The interval `(-1, 1)`, general (not necessarily even) functions.
    Interval,
    /// Radial functions on the unit ball of `R^dim`, represented on `[0, 1)`.
    Radial { dim: usize },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Interval => 1,
            Geometry::Radial { dim } => *dim,
        }
    }

    /// Lebesgue measure of the physical domain.
    pub fn measure(&self) -> f64 {
        match self {
            Geometry::Interval => 2.0,
            Geometry::Radial { dim } => sphere_area(*dim) / *dim as f64,
        }
    }
}

/// Parameters of a graded mesh.
///
/// Bulk nodes follow the power map `dist = (1 - xi)^p` with `p = grading_exponent`,
/// so spacing scales like `dist^{1 - 1/p}`. Once consecutive distances would
/// shrink faster than `layer_ratio`, the mesh continues geometrically with that
/// ratio down to `rho_min` (or to the natural end of the power map).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub geometry: Geometry,
    /// Number of bulk nodes on `[0, 1)` (half-interval for [`Geometry::Interval`]).
    pub nodes: usize,
    pub grading_exponent: f64,
    pub layer_ratio: f64,
    pub rho_min: Option<f64>,
}

impl GridSpec {
    /// Grading with spacing proportional to `dist^{1 - s/2}`.
    pub fn for_order(geometry: Geometry, nodes: usize, s: f64) -> Self {
        Self {
            geometry,
            nodes,
            grading_exponent: 2.0 / s,
            layer_ratio: 0.7,
            rho_min: None,
        }
    }

    pub fn with_rho_min(mut self, rho_min: f64) -> Self {
        self.rho_min = Some(rho_min);
        self
    }

    /// Same spec with twice as many bulk nodes.
    pub fn refined(mut self) -> Self {
        self.nodes *= 2;
        self
    }

    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::new(self)
    }
}

/// A boundary-graded mesh with dual-cell quadrature weights.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    spec: GridSpec,
    pos: Vec<f64>,
    dist: Vec<f64>,
    weights: Vec<f64>,
}

/// Distances to the boundary of the half-grid on `(0, 1]`, decreasing.
fn half_distances(spec: &GridSpec, centered: bool) -> Vec<f64> {
    let n = spec.nodes;
    let p = spec.grading_exponent;
    let denom = if centered { n as f64 + 0.5 } else { n as f64 + 1.0 };
    let shift = if centered { 0.5 } else { 0.0 };
    let bulk: Vec<f64> = (1..=n)
        .map(|k| ((denom - (k as f64 - shift)) / denom).powf(p))
        .collect();
    let mut natural_end = *bulk.last().unwrap();
    if centered {
        natural_end = natural_end.max(1e-12);
    }
    let target = spec.rho_min.unwrap_or(natural_end);
    let q = spec.layer_ratio;
    let mut out = Vec::with_capacity(n + 64);
    for &d in &bulk {
        if let Some(&prev) = out.last() {
            if d / prev < q {
                break;
            }
        }
        out.push(d);
    }
    // Geometric layer with the mildest ratio <= q that lands exactly on the target.
    let last = *out.last().unwrap();
    if last > target * (1.0 + 1e-12) {
        let steps = ((target / last).ln() / q.ln()).ceil().max(1.0) as usize;
        let ratio = (target / last).powf(1.0 / steps as f64);
        for k in 1..steps {
            out.push(last * ratio.powi(k as i32));
        }
        out.push(target);
    }
    out
}

impl RadialGrid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        if spec.nodes < 8 {
            return Err(FracError::Domain(format!("need at least 8 bulk nodes, got {}", spec.nodes)));
        }
        if !(spec.grading_exponent >= 1.0) {
            return Err(FracError::Domain("grading exponent must be >= 1".into()));
        }
        if !(spec.layer_ratio > 0.0 && spec.layer_ratio < 1.0) {
            return Err(FracError::Domain("layer ratio must lie in (0, 1)".into()));
        }
        if let Some(r) = spec.rho_min {
            if !(r > 1e-300 && r < 1e-2) {
                return Err(FracError::Domain(format!("rho_min = {r} out of range")));
            }
        }
        match spec.geometry {
            Geometry::Interval => {
                let half = half_distances(spec, true);
                if half.last().copied().unwrap_or(1.0) < 1e-13 {
                    return Err(FracError::Domain(
                        "interval grids are limited to boundary distances >= 1e-13".into(),
                    ));
                }
                let m = half.len();
                let mut pos = Vec::with_capacity(2 * m);
                let mut dist = Vec::with_capacity(2 * m);
                for &d in half.iter().rev() {
                    pos.push(-(1.0 - d));
                    dist.push(d);
                }
                for &d in &half {
                    pos.push(1.0 - d);
                    dist.push(d);
                }
                // Dual cells: midpoints between nodes, end cells reach the boundary.
                let n = pos.len();
                let mut weights = vec![0.0; n];
                for i in 0..n {
                    let left = if i == 0 {
                        dist[0]
                    } else {
                        0.5 * gap(&pos, &dist, i - 1, i)
                    };
                    let right = if i == n - 1 {
                        dist[n - 1]
                    } else {
                        0.5 * gap(&pos, &dist, i, i + 1)
                    };
                    weights[i] = left + right;
                }
                Ok(Self { spec: *spec, pos, dist, weights })
            }
            Geometry::Radial { dim } => {
                if !(1..=3).contains(&dim) {
                    return Err(FracError::Domain(format!("dimension {dim} not in 1..=3")));
                }
                let dist: Vec<f64> = half_distances(spec, false);
                let pos: Vec<f64> = dist.iter().map(|&d| 1.0 - d).collect();
                let n = dist.len();
                // Dual cell edges expressed as distances to the boundary.
                let mut edges = Vec::with_capacity(n + 1);
                edges.push(1.0);
                for i in 0..n - 1 {
                    edges.push(0.5 * (dist[i] + dist[i + 1]));
                }
                edges.push(0.0);
                let area = sphere_area(dim);
                let weights = (0..n)
                    .map(|i| {
                        // (1 - e1)^N - (1 - e0)^N with e0 > e1.
                        let (e0, e1) = (edges[i], edges[i + 1]);
                        let (a, b) = (1.0 - e1, 1.0 - e0);
                        let diff = e0 - e1;
                        let v = match dim {
                            1 => diff,
                            2 => diff * (a + b),
                            _ => diff * (a * a + a * b + b * b),
                        };
                        area * v / dim as f64
                    })
                    .collect();
                Ok(Self { spec: *spec, pos, dist, weights })
            }
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn geometry(&self) -> Geometry {
        self.spec.geometry
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Node positions (signed for the interval, radii for radial grids).
    pub fn nodes(&self) -> &[f64] {
        &self.pos
    }

    /// Unclamped distances `1 - |x|` to the boundary.
    pub fn boundary_distances(&self) -> &[f64] {
        &self.dist
    }

    /// `rho(x) = min{1/2, dist(x, boundary)}`.
    pub fn rho(&self, i: usize) -> f64 {
        self.dist[i].min(0.5)
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grading_exponent(&self) -> f64 {
        self.spec.grading_exponent
    }

    /// Smallest boundary distance on the grid.
    pub fn min_distance(&self) -> f64 {
        self.dist.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Size of the cell touching the boundary.
    pub fn boundary_cell(&self) -> f64 {
        self.min_distance()
    }

    /// Signed offset `x_j - x_i`, computed from boundary distances when both
    /// nodes sit on the same side.
    pub fn offset(&self, i: usize, j: usize) -> f64 {
        match self.spec.geometry {
            Geometry::Radial { .. } => self.dist[i] - self.dist[j],
            Geometry::Interval => {
                let (xi, xj) = (self.pos[i], self.pos[j]);
                if xi >= 0.0 && xj >= 0.0 {
                    self.dist[i] - self.dist[j]
                } else if xi < 0.0 && xj < 0.0 {
                    self.dist[j] - self.dist[i]
                } else {
                    xj - xi
                }
            }
        }
    }

    /// Stable 64-bit fingerprint of the node set, recorded with results
    /// whose meaning depends on the discretisation.
    pub fn hash64(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.spec.geometry.hash(&mut h);
        for (&p, &d) in self.pos.iter().zip(&self.dist) {
            p.to_bits().hash(&mut h);
            d.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Indices of nodes whose boundary distance lies in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.dist[i] >= lo && self.dist[i] <= hi)
            .collect()
    }

    /// Weighted sum `sum_i w_i f_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

fn gap(pos: &[f64], dist: &[f64], i: usize, j: usize) -> f64 {
    let (xi, xj) = (pos[i], pos[j]);
    if xi >= 0.0 && xj >= 0.0 {
        dist[i] - dist[j]
    } else if xi < 0.0 && xj < 0.0 {
        dist[j] - dist[i]
    } else {
        xj - xi
    }
}

/// Values of a field at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FracError::Domain(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FracError::Domain("grid function has non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self { values: vec![0.0; grid.len()] }
    }

    /// Samples `f(position, boundary distance)` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64>(grid: &RadialGrid, f: F) -> Self {
        let values = grid
            .nodes()
            .iter()
            .zip(grid.boundary_distances())
            .map(|(&x, &d)| f(x, d))
            .collect();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<GridSpec> {
        let mut v = Vec::new();
        for s in [0.3, 0.5, 0.75] {
            v.push(GridSpec::for_order(Geometry::Interval, 128, s));
            for dim in 1..=3 {
                v.push(GridSpec::for_order(Geometry::Radial { dim }, 128, s));
            }
        }
        v.push(GridSpec::for_order(Geometry::Radial { dim: 1 }, 128, 0.75).with_rho_min(1e-60));
        v
    }

    #[test]
    fn nodes_increase_and_weights_sum_to_measure() {
        for spec in specs() {
            let g = spec.build().unwrap();
            for i in 1..g.len() {
                assert!(g.offset(i - 1, i) > 0.0, "{spec:?} at {i}");
            }
            assert!(g.min_distance() <= 1e-3);
            assert!(g.cell_weights().iter().all(|&w| w > 0.0));
            let total: f64 = g.cell_weights().iter().sum();
            let m = spec.geometry.measure();
            assert!(((total - m) / m).abs() < 1e-10, "{spec:?}: {total} vs {m}");
        }
    }

    #[test]
    fn quarter_of_nodes_near_boundary() {
        for spec in specs() {
            let g = spec.build().unwrap();
            let near = g.boundary_distances().iter().filter(|&&d| d < 0.05).count();
            assert!(near * 4 >= g.len(), "{spec:?}: {near}/{}", g.len());
        }
    }

    #[test]
    fn deep_layer_reaches_rho_min() {
        let g = GridSpec::for_order(Geometry::Radial { dim: 1 }, 64, 0.75)
            .with_rho_min(1e-40)
            .build()
            .unwrap();
        assert!((g.min_distance() - 1e-40).abs() < 1e-52);
        let d = g.boundary_distances();
        for i in 1..d.len() {
            assert!(d[i] / d[i - 1] >= 0.7 - 1e-12);
        }
    }

    #[test]
    fn rho_is_clamped() {
        let g = GridSpec::for_order(Geometry::Radial { dim: 2 }, 64, 0.5).build().unwrap();
        assert_eq!(g.rho(0), 0.5);
        assert!(g.rho(g.len() - 1) < 1e-3);
    }
}
