//! Collocation discretisation of `(-Delta)^s` with zero exterior data.
//!
//! The unknown is interpolated piecewise linearly between nodes (zero at
//! the boundary, constant on `[0, r_0]` for radial grids). In the window
//! `|t| < h` around the collocation point the hypersingular part is handled
//! with the quadratic model through the two neighbours, integrated against
//! the exact kernel moments. Far-field cells use graded Gauss-Legendre rules
//! and the exterior contributes the closed-form tail mass on the diagonal.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{FracError, Result};
use crate::grid::{Geometry, RadialGrid};
use crate::kernel::ReducedKernel;
use crate::quadrature::{gl16, gl8};
use crate::special::c_ns;

/// Order, dimension and normalisation of the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub dim: usize,
    pub c_ns: f64,
}

impl FracParams {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(FracError::Domain(format!("order s = {s} outside (0, 1)")));
        }
        if !(1..=3).contains(&dim) {
            return Err(FracError::Domain(format!("dimension {dim} not in 1..=3")));
        }
        Ok(Self { s, dim, c_ns: c_ns(dim, s) })
    }
}

/// A point of the piecewise-linear representation seen from one row.
#[derive(Debug, Clone, Copy)]
struct Knot {
    offset: f64,
    dof: Option<usize>,
}

/// The assembled dense operator.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub params: FracParams,
    pub grid: RadialGrid,
}

fn knots_for_row(grid: &RadialGrid, i: usize) -> Vec<Knot> {
    let n = grid.len();
    let pos = grid.nodes();
    let dist = grid.boundary_distances();
    let mut knots = Vec::with_capacity(n + 2);
    match grid.geometry() {
        Geometry::Interval => {
            let left = if pos[i] < 0.0 { dist[i] } else { 2.0 - dist[i] };
            let right = if pos[i] > 0.0 { dist[i] } else { 2.0 - dist[i] };
            knots.push(Knot { offset: -left, dof: None });
            for j in 0..n {
                knots.push(Knot { offset: grid.offset(i, j), dof: Some(j) });
            }
            knots.push(Knot { offset: right, dof: None });
        }
        Geometry::Radial { .. } => {
            knots.push(Knot { offset: -pos[i], dof: Some(0) });
            for j in 0..n {
                knots.push(Knot { offset: grid.offset(i, j), dof: Some(j) });
            }
            knots.push(Knot { offset: dist[i], dof: None });
        }
    }
    knots
}

/// Interpolant of a cell between its two knots.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Linear,
    /// `u_p ((len - sigma) / len)^e`: the cell ends on the boundary.
    PowerAtEnd(f64),
    /// `u_q (sigma / len)^e`: the cell starts on the boundary.
    PowerAtStart(f64),
}

/// Kernel moments over the part `[a, b]` (not containing `0`) of a cell of
/// length `len` starting at offset `p`: `int k`, `int sigma k` and
/// `int sigma (sigma - len) k` with `sigma = t - p`.
///
/// `sigma_lo = a - p` and `sigma_hi = b - p` must be supplied accurately; the
/// rule is graded away from `t = 0` and evaluates `sigma` locally, so tiny
/// cells far from the collocation point keep full relative accuracy.
fn cell_moments(
    kernel: &ReducedKernel,
    r: f64,
    (a, b): (f64, f64),
    (sigma_lo, sigma_hi): (f64, f64),
    len: f64,
    shape: Shape,
) -> [f64; 3] {
    let mut m = [0.0; 3];
    if b <= a {
        return m;
    }
    // Walk outward from the end nearest the origin.
    let (d0, sigma0, dir) = if a > 0.0 { (a, sigma_lo, 1.0) } else { (-b, sigma_hi, -1.0) };
    let total = sigma_hi - sigma_lo;
    let mut walked = 0.0;
    while walked < total {
        let d = d0 + walked;
        let step = d.min(total - walked);
        for (u, w) in gl8().mapped(0.0, step) {
            let t = dir * (d + u);
            let sigma = sigma0 + dir * (walked + u);
            let k = w * kernel.eval(r, t);
            m[0] += k;
            m[1] += k * match shape {
                Shape::Linear => sigma,
                // len * (1 - phi) for the node-side basis function phi.
                Shape::PowerAtEnd(e) => len * (1.0 - ((len - sigma) / len).max(0.0).powf(e)),
                Shape::PowerAtStart(e) => len * (sigma / len).max(0.0).powf(e),
            };
            m[2] += k * sigma * (sigma - len);
        }
        walked += step;
    }
    m
}

/// Moments `(M1, M2)` of the window `|t| < h`.
fn window_moments(kernel: &ReducedKernel, r: f64, h: f64) -> (f64, f64) {
    let s = kernel.s;
    let beta = 1.0 / (2.0 - 2.0 * s);
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (v, w) in gl16().mapped(0.0, 1.0) {
        let t = h * v.powf(beta);
        let plus = kernel.smooth(r, t);
        let minus = kernel.smooth(r, -t);
        m2 += w * (plus + minus);
        m1 += w * v.powf(-beta) * (plus - minus);
    }
    (m1 * beta * h.powf(1.0 - 2.0 * s), m2 * beta * h.powf(2.0 - 2.0 * s))
}

/// Accurate lengths of the cells between consecutive knots.
fn cell_lengths(grid: &RadialGrid) -> Vec<f64> {
    let n = grid.len();
    let dist = grid.boundary_distances();
    let mut spans = Vec::with_capacity(n + 1);
    spans.push(match grid.geometry() {
        Geometry::Interval => dist[0],
        Geometry::Radial { .. } => grid.nodes()[0],
    });
    for j in 0..n - 1 {
        spans.push(grid.offset(j, j + 1));
    }
    spans.push(dist[n - 1]);
    spans
}

fn assemble_row(grid: &RadialGrid, kernel: &ReducedKernel, spans: &[f64], i: usize) -> Vec<f64> {
    let n = grid.len();
    let mut row = vec![0.0; n];
    let knots = knots_for_row(grid, i);
    let r = grid.nodes()[i];
    let radial = matches!(grid.geometry(), Geometry::Radial { .. });
    let ghost = 2.0 * grid.nodes()[0];

    // Second-difference stencil at node j; the radial centre is mirrored into a ghost node.
    let stencil = |j: usize| {
        let kj = j + 1;
        let (a, dl) = if radial && j == 0 { (ghost, Some(0)) } else { (spans[j], knots[kj - 1].dof) };
        let (b, dr) = (spans[j + 1], knots[kj + 1].dof);
        (a, b, dl, dr)
    };
    let curvature = |j: usize| -> [(Option<usize>, f64); 3] {
        let (a, b, dl, dr) = stencil(j);
        [
            (dl, 2.0 / (a * (a + b))),
            (Some(j), -2.0 / (a * b)),
            (dr, 2.0 / (b * (a + b))),
        ]
    };

    let (hl, hr, left_dof, right_dof) = stencil(i);
    let mut h = hl.min(hr);
    if radial {
        h = h.min(r);
    }
    let (m1, m2) = window_moments(kernel, r, h);
    let d1 = [-hr / (hl * (hl + hr)), (hr - hl) / (hl * hr), hl / (hr * (hl + hr))];
    let d2 = curvature(i);
    for (c, dof) in [left_dof, Some(i), right_dof].into_iter().enumerate() {
        if let Some(j) = dof {
            row[j] += -m1 * d1[c] - 0.5 * m2 * d2[c].1;
        }
    }

    for (c, seg) in knots.windows(2).enumerate() {
        let (p, q) = (seg[0], seg[1]);
        let len = spans[c];
        // Parts of the cell outside the window (-h, h).
        let left = if q.offset <= -h { (0.0, len) } else { (0.0, -h - p.offset) };
        let right = if p.offset >= h { (0.0, len) } else { (h - p.offset, len) };
        // Boundary cells follow the rho^s decay instead of a straight line.
        let shape = match (p.dof, q.dof) {
            (Some(_), None) => Shape::PowerAtEnd(kernel.s),
            (None, Some(_)) => Shape::PowerAtStart(kernel.s),
            _ => Shape::Linear,
        };
        let mut m = [0.0; 3];
        for (piece, sig) in [((p.offset, q.offset.min(-h)), left), ((p.offset.max(h), q.offset), right)] {
            for (acc, v) in m.iter_mut().zip(cell_moments(kernel, r, piece, sig, len, shape)) {
                *acc += v;
            }
        }
        if m[0] == 0.0 {
            continue;
        }
        let i1 = m[1] / len;
        row[i] += m[0];
        if let Some(j) = p.dof {
            row[j] -= m[0] - i1;
        }
        if let Some(j) = q.dof {
            row[j] -= i1;
        }
        // Interpolation misses (u''/2)(t - p)(t - q); u'' is averaged over the
        // stencils of the two end nodes.
        let interior_cell = c >= 1 && p.dof.is_some() && q.dof.is_some() && p.dof != q.dof;
        if radial && c == 0 {
            // Constant on [0, r_0]: u misses (u''/2)(y^2 - r_0^2) with y = sigma.
            let missing = m[2] + len * (m[1] - len * m[0]);
            for (dof, w) in curvature(0) {
                if let Some(j) = dof {
                    row[j] -= 0.5 * missing * w;
                }
            }
        } else if interior_cell {
            for node in [c - 1, c] {
                for (dof, w) in curvature(node) {
                    if let Some(j) = dof {
                        row[j] -= 0.25 * m[2] * w;
                    }
                }
            }
        }
    }

    row[i] += kernel.tail(r, grid.boundary_distances()[i]);
    row
}

impl OperatorMatrix {
    pub fn assemble(grid: &RadialGrid, params: &FracParams) -> Result<Self> {
        if grid.geometry().dim() != params.dim {
            return Err(FracError::Domain(format!(
                "grid dimension {} does not match operator dimension {}",
                grid.geometry().dim(),
                params.dim
            )));
        }
        let kernel = ReducedKernel::new(grid.geometry(), params.s);
        let n = grid.len();
        let spans = cell_lengths(grid);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| assemble_row(grid, &kernel, &spans, i))
            .collect();
        // Positive off-diagonal residue at rounding level is cleared.
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let v = rows[i][j];
            if i != j && v > 0.0 && v <= 1e-13 * rows[i][i] {
                0.0
            } else {
                v
            }
        });
        Self::check_diagonal(&matrix)?;
        Ok(Self { matrix, params: *params, grid: grid.clone() })
    }

    fn check_diagonal(matrix: &DMatrix<f64>) -> Result<()> {
        for i in 0..matrix.nrows() {
            let d = matrix[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(FracError::SingularAssembly { row: i, value: d });
            }
        }
        Ok(())
    }

    /// Assembly without the diagonal check, for diagnostics.
    #[doc(hidden)]
    pub fn assemble_unchecked(grid: &RadialGrid, params: &FracParams) -> DMatrix<f64> {
        let kernel = ReducedKernel::new(grid.geometry(), params.s);
        let spans = cell_lengths(grid);
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| assemble_row(grid, &kernel, &spans, i))
            .collect();
        DMatrix::from_fn(grid.len(), grid.len(), |i, j| rows[i][j])
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A u` at the nodes.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(u);
        v.as_slice().to_vec()
    }

    /// Symmetrised form `S = (W A + (W A)^T) / 2`, `W` the cell weights.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let w = self.grid.cell_weights();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (w[i] * self.matrix[(i, j)] + w[j] * self.matrix[(j, i)]))
    }

    /// Largest relative asymmetry of `W A`.
    pub fn asymmetry(&self) -> f64 {
        let w = self.grid.cell_weights();
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                let a = w[i] * self.matrix[(i, j)];
                let b = w[j] * self.matrix[(j, i)];
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }

    /// Largest positive off-diagonal entry relative to its diagonal.
    pub fn max_offdiagonal_sign_violation(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let d = self.matrix[(i, i)];
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.matrix[(i, j)] / d);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::special::torsion_constant;

    #[test]
    fn params_validate() {
        assert!(FracParams::new(0.0, 1).is_err());
        assert!(FracParams::new(0.5, 4).is_err());
        let p = FracParams::new(0.5, 1).unwrap();
        assert!((p.c_ns - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn torsion_profile_is_mapped_to_a_constant() {
        for (geometry, s) in [
            (Geometry::Interval, 0.5),
            (Geometry::Radial { dim: 1 }, 0.3),
            (Geometry::Radial { dim: 2 }, 0.6),
            (Geometry::Radial { dim: 3 }, 0.75),
        ] {
            let grid = GridSpec::for_order(geometry, 160, s).build().unwrap();
            let p = FracParams::new(s, geometry.dim()).unwrap();
            let op = OperatorMatrix::assemble(&grid, &p).unwrap();
            let phi: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(grid.boundary_distances())
                .map(|(&x, &d)| (d * (2.0 - d)).powf(s) * (x * 0.0 + 1.0))
                .collect();
            let v = op.apply(&phi);
            let exact = 1.0 / torsion_constant(geometry.dim(), s);
            for (i, &x) in grid.nodes().iter().enumerate() {
                if x.abs() < 0.5 {
                    assert!(((v[i] - exact) / exact).abs() < 0.01, "{geometry:?} x={x}: {} vs {exact}", v[i]);
                }
            }
            assert!(op.max_offdiagonal_sign_violation() <= 0.0, "{geometry:?}");
        }
    }
}
