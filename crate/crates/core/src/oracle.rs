//! Cross-checks of the assembled operator against the pointwise quadrature.

use crate::error::{FracError, Result};
use crate::grid::{GridFunction, GridSpec, RadialGrid};
use crate::operator::{FracParams, OperatorMatrix};
use crate::pointwise::apply_pointwise;
use crate::profile::Profile;

/// Cubic Lagrange interpolation of nodal values at `x`.
pub fn interpolate(grid: &RadialGrid, values: &[f64], x: f64) -> f64 {
    let pos = grid.nodes();
    let n = pos.len();
    let k = pos.partition_point(|&p| p < x);
    let start = k.saturating_sub(2).min(n.saturating_sub(4));
    let idx: Vec<usize> = (start..(start + 4).min(n)).collect();
    idx.iter()
        .map(|&i| {
            let w: f64 = idx
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (x - pos[j]) / (pos[i] - pos[j]))
                .product();
            w * values[i]
        })
        .sum()
}

/// Assembled values of `profile` at `points` on the grid and its refinement,
/// next to the pointwise quadrature.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub points: Vec<f64>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub pointwise: Vec<f64>,
    /// Sup over the points of `|fine - coarse|`.
    pub discretisation_tol: f64,
    /// Largest error estimate of the pointwise values.
    pub quadrature_tol: f64,
}

impl OracleComparison {
    pub fn combined_tol(&self) -> f64 {
        self.discretisation_tol + self.quadrature_tol
    }

    pub fn worst_error(&self) -> f64 {
        self.fine
            .iter()
            .zip(&self.pointwise)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every point agrees within `factor` combined tolerances.
    pub fn agrees(&self, factor: f64) -> bool {
        self.worst_error() <= factor * self.combined_tol()
    }
}

fn assembled_at(spec: &GridSpec, params: &FracParams, profile: &dyn Profile, points: &[f64]) -> Result<Vec<f64>> {
    let grid = spec.build()?;
    let op = OperatorMatrix::assemble(&grid, params)?;
    let u = GridFunction::sample(&grid, |x, d| profile.value_at(x, d));
    let au = op.apply(&u.values);
    Ok(points.iter().map(|&x| interpolate(&grid, &au, x)).collect())
}

pub fn compare_with_pointwise(
    profile: &dyn Profile,
    params: &FracParams,
    spec: &GridSpec,
    points: &[f64],
    quad_tol: f64,
) -> Result<OracleComparison> {
    if spec.geometry.dim() != params.dim {
        return Err(FracError::Domain("grid and operator dimensions differ".into()));
    }
    let coarse = assembled_at(spec, params, profile, points)?;
    let fine = assembled_at(&spec.refined(), params, profile, points)?;
    let estimates = points
        .iter()
        .map(|&x| apply_pointwise(profile, params, x, quad_tol))
        .collect::<Result<Vec<_>>>()?;
    let discretisation_tol = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let quadrature_tol = estimates.iter().map(|e| e.error).fold(quad_tol, f64::max);
    Ok(OracleComparison {
        points: points.to_vec(),
        coarse,
        fine,
        pointwise: estimates.iter().map(|e| e.value).collect(),
        discretisation_tol,
        quadrature_tol,
    })
}
