//! The first eigenvalue of the linearised operator `(-Delta)^s - 2 lambda / (a - u)^3`,
//! Hardy quotients, and diagnostics of the extremal solution.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{FracError, Result};
use crate::green::GreenOperator;
use crate::grid::{GridFunction, RadialGrid};
use crate::lu::MLu;
use crate::pullin::PullInResult;
use crate::solver::MinimalSolver;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSettings {
    /// Target residual relative to `max(|mu1|, 1)`.
    pub eig_tol: f64,
    pub max_sweeps: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { eig_tol: 1e-9, max_sweeps: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub lambda: f64,
    pub mu1: f64,
    /// Normalised so that `sum w v^2 = 1`, positive.
    pub eigvec: GridFunction,
    /// `|(A - P) v - mu v|` in the weighted norm.
    pub residual: f64,
    /// Residual target actually applied.
    pub tolerance: f64,
    pub sweeps: usize,
}

/// The linearisation `(A - P) v = mu v` of the collocation scheme.
///
/// `A` is a Z-matrix, so the smallest eigenvalue is real with a positive
/// eigenvector, and `A - P - sigma I` factors with positive pivots exactly
/// when `sigma` lies below it.
#[derive(Debug, Clone)]
pub struct Pencil {
    /// `A - P`.
    pub matrix: DMatrix<f64>,
    /// Cell weights, the mass of the weighted quadratic form.
    pub mass: Vec<f64>,
    /// Potential values `2 lambda / (a - u)^3`.
    pub potential: Vec<f64>,
}

impl Pencil {
    /// Pencil of the linearisation at `u`; `u = 0`, `lambda = 0` gives the bare operator.
    pub fn new(green: &GreenOperator, lambda: f64, u: &GridFunction, a: &GridFunction) -> Result<Self> {
        let mass = green.grid().cell_weights().to_vec();
        let mut matrix = green.operator().matrix.clone();
        let mut potential = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let gap = a.values[i] - u.values[i];
            if !(gap > 0.0) {
                return Err(FracError::Domain(format!("gap a - u = {gap:e} at node {i}")));
            }
            let p = 2.0 * lambda / (gap * gap * gap);
            matrix[(i, i)] -= p;
            potential.push(p);
        }
        Ok(Self { matrix, mass, potential })
    }

    /// `phi^T W (A - P) phi / phi^T W phi`.
    pub fn rayleigh(&self, phi: &[f64]) -> f64 {
        let y = &self.matrix * DVector::from_column_slice(phi);
        let num: f64 = (0..phi.len()).map(|i| self.mass[i] * phi[i] * y[i]).sum();
        let den: f64 = phi.iter().zip(&self.mass).map(|(v, m)| m * v * v).sum();
        num / den
    }

    fn shifted(&self, sigma: f64) -> Option<MLu> {
        let mut k = self.matrix.clone();
        for i in 0..self.mass.len() {
            k[(i, i)] -= sigma;
        }
        MLu::new(&k).ok()
    }

    /// `|(A - P) v - mu v|` in the weighted norm.
    fn residual(&self, v: &[f64], mu: f64) -> f64 {
        let r = &self.matrix * DVector::from_column_slice(v);
        (0..v.len())
            .map(|i| self.mass[i] * (r[i] - mu * v[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn normalise(&self, v: &mut [f64]) {
        let norm: f64 = v.iter().zip(&self.mass).map(|(v, m)| m * v * v).sum::<f64>().sqrt();
        let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / norm);
    }

    /// Smallest eigenvalue by shifted inverse iteration from the constant vector.
    ///
    /// The first shift is `-max p`, below the spectrum. Later shifts move
    /// towards the current estimate but are accepted only when every pivot of
    /// the shifted matrix stays positive, so every shift stays below `mu1`.
    pub fn smallest(&self, settings: &EigenSettings) -> Result<(f64, Vec<f64>, f64, f64, usize)> {
        let n = self.mass.len();
        let mut sigma = -self.potential.iter().cloned().fold(0.0, f64::max);
        let mut lu = self.shifted(sigma).ok_or(FracError::EigenFailure { residual: f64::NAN, sweeps: 0 })?;
        let mut v = vec![1.0; n];
        self.normalise(&mut v);
        let mut residual = f64::INFINITY;
        for sweep in 1..=settings.max_sweeps {
            v = lu.solve(&v)?;
            self.normalise(&mut v);
            let mu = self.rayleigh(&v);
            residual = self.residual(&v, mu);
            let tolerance = settings.eig_tol * mu.abs().max(1.0);
            if residual <= tolerance {
                return Ok((mu, v, residual, tolerance, sweep));
            }
            if sweep % 3 == 0 {
                let mut step = 0.9;
                while step > 1e-3 {
                    let trial = sigma + step * (mu - sigma);
                    if let Some(f) = self.shifted(trial) {
                        sigma = trial;
                        lu = f;
                        break;
                    }
                    step *= 0.5;
                }
            }
        }
        Err(FracError::EigenFailure { residual, sweeps: settings.max_sweeps })
    }
}

/// `mu_1(lambda)` at the minimal solution `u`.
pub fn mu1(green: &GreenOperator, lambda: f64, u: &GridFunction, a: &GridFunction, settings: &EigenSettings) -> Result<StabilityResult> {
    let pencil = Pencil::new(green, lambda, u, a)?;
    let (mu, v, residual, tolerance, sweeps) = pencil.smallest(settings)?;
    Ok(StabilityResult { lambda, mu1: mu, eigvec: GridFunction::new(green.grid(), v)?, residual, tolerance, sweeps })
}

/// Smallest Rayleigh quotient over `count` random smooth trial functions,
/// combinations of `(d (2 - d))^s x^{2k}` with coefficients in `[0, 1)`.
pub fn random_rayleigh_min(pencil: &Pencil, grid: &RadialGrid, s: f64, count: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let modes: Vec<GridFunction> = (0..6)
        .map(|k| GridFunction::sample(grid, |x, d| (d * (2.0 - d)).powf(s) * x.powi(2 * k)))
        .collect();
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..modes.len()).map(|_| rng.random::<f64>()).collect();
            let phi: Vec<f64> = (0..grid.len()).map(|i| modes.iter().zip(&c).map(|(m, c)| c * m.values[i]).sum()).collect();
            pencil.rayleigh(&phi)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `sum w phi^2 rho^{-2s} / phi^T S phi` for bumps centred at the given
/// boundary distances, each supported on `[d/2, 3d/2]`.
#[derive(Debug, Clone)]
pub struct HardyReport {
    pub centres: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl HardyReport {
    pub fn max(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn bump_at_distance(grid: &RadialGrid, centre: f64) -> GridFunction {
    let half_width = 0.5 * centre;
    GridFunction::sample(grid, |x, d| {
        let z = (d - centre) / half_width;
        if x < 0.0 || z.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - z * z).powi(3)
        }
    })
}

pub fn hardy_quotient(green: &GreenOperator, phi: &GridFunction) -> f64 {
    let grid = green.grid();
    let s = green.params().s;
    let w = grid.cell_weights();
    let num: f64 = (0..grid.len()).map(|i| w[i] * phi.values[i].powi(2) * grid.rho(i).powf(-2.0 * s)).sum();
    let x = DVector::from_column_slice(&phi.values);
    num / x.dot(&(green.operator().symmetric_form() * &x))
}

pub fn hardy_ratio(green: &GreenOperator, centres: &[f64]) -> Result<HardyReport> {
    let grid = green.grid();
    let mut ratios = Vec::with_capacity(centres.len());
    for &c in centres {
        if !(c > 0.0 && c <= 0.5) {
            return Err(FracError::Domain(format!("bump centre {c} outside (0, 1/2]")));
        }
        let phi = bump_at_distance(grid, c);
        let support = phi.values.iter().filter(|v| **v > 0.0).count();
        if support < 5 {
            return Err(FracError::InsufficientWindow { points: support, needed: 5 });
        }
        ratios.push(hardy_quotient(green, &phi));
    }
    Ok(HardyReport { centres: centres.to_vec(), ratios })
}

/// The three smooth test functions `(1 - |x|^2)^3 {1, x^2, 1 - |x|^2}`.
pub fn test_functions(grid: &RadialGrid) -> [GridFunction; 3] {
    let base = |d: f64| (d * (2.0 - d)).powi(3);
    [
        GridFunction::sample(grid, |_, d| base(d)),
        GridFunction::sample(grid, |x, d| base(d) * x * x),
        GridFunction::sample(grid, |_, d| base(d) * d * (2.0 - d)),
    ]
}

#[derive(Debug, Clone)]
pub struct ExtremalReport {
    pub lambda: f64,
    pub solution: GridFunction,
    /// `(beta, sum w rho^{s - beta} / (a - u)^2)`.
    pub weighted_integrals: Vec<(f64, f64)>,
    /// `sum w [u A xi - lambda xi / (a - u)^2]` per test function.
    pub weak_residuals: [f64; 3],
    /// `1e-6 |xi|_inf lambda` per test function.
    pub weak_tols: [f64; 3],
}

impl ExtremalReport {
    pub fn weak_ok(&self) -> bool {
        self.weak_residuals.iter().zip(&self.weak_tols).all(|(r, t)| r.abs() <= *t)
    }
}

/// Weak-form residuals of `u` at load `lambda` against the test functions.
pub fn weak_residuals(green: &GreenOperator, lambda: f64, u: &GridFunction, a: &GridFunction) -> ([f64; 3], [f64; 3]) {
    let grid = green.grid();
    let w = grid.cell_weights();
    let mut res = [0.0; 3];
    let mut tols = [0.0; 3];
    for (k, xi) in test_functions(grid).iter().enumerate() {
        let axi = green.operator().apply(&xi.values);
        res[k] = (0..grid.len())
            .map(|i| w[i] * (u.values[i] * axi[i] - lambda * xi.values[i] / (a.values[i] - u.values[i]).powi(2)))
            .sum();
        tols[k] = 1e-6 * xi.sup_norm() * lambda;
    }
    (res, tols)
}

/// The best available approximation of the extremal solution: the minimal
/// solution at the lower end of the pull-in bracket.
pub fn extremal_solution(solver: &MinimalSolver, pullin: &PullInResult, gamma: f64) -> Result<ExtremalReport> {
    let green = solver.green;
    let grid = green.grid();
    let s = green.params().s;
    if pullin.grid_hash != grid.hash64() {
        return Err(FracError::Domain("pull-in bracket was computed on another grid".into()));
    }
    let u = pullin.lo_solution.clone();
    let lambda = pullin.lambda_lo;
    let w = grid.cell_weights();
    let top = (gamma - s + 1.0).min(s);
    let weighted_integrals = [0.1, 0.2]
        .iter()
        .map(|f| {
            let beta = f * top;
            let v: f64 = (0..grid.len())
                .map(|i| w[i] * grid.rho(i).powf(s - beta) / (solver.a.values[i] - u.values[i]).powi(2))
                .sum();
            (beta, v)
        })
        .collect();
    let (weak_residuals, weak_tols) = weak_residuals(green, lambda, &u, &solver.a);
    Ok(ExtremalReport { lambda, solution: u, weighted_integrals, weak_residuals, weak_tols })
}

/// Minimum gap and `sum w (a - u)^{-3N/(2s)}` on `K = {rho >= fraction max rho}`.
pub fn touchdown_gap_profile(grid: &RadialGrid, u: &GridFunction, a: &GridFunction, fraction: f64, s: f64) -> Result<(f64, f64)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(FracError::Domain(format!("compact fraction {fraction}")));
    }
    let dim = grid.geometry().dim() as f64;
    let cut = fraction * (0..grid.len()).map(|i| grid.rho(i)).fold(0.0, f64::max);
    let w = grid.cell_weights();
    let mut inf_gap = f64::INFINITY;
    let mut integral = 0.0;
    for i in (0..grid.len()).filter(|&i| grid.rho(i) >= cut) {
        let gap = a.values[i] - u.values[i];
        inf_gap = inf_gap.min(gap);
        integral += w[i] * gap.powf(-3.0 * dim / (2.0 * s));
    }
    Ok((inf_gap, integral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, GridSpec};
    use crate::operator::FracParams;
    use crate::solver::MembraneProfile;

    fn setup(geometry: Geometry, s: f64, n: usize) -> GreenOperator {
        let grid = GridSpec::for_order(geometry, n, s).build().unwrap();
        GreenOperator::new(&grid, &FracParams::new(s, geometry.dim()).unwrap()).unwrap()
    }

    fn dense_smallest(p: &Pencil) -> f64 {
        p.matrix.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn bare_operator_matches_dense_eigensolver() {
        let green = setup(Geometry::Interval, 0.5, 64);
        let grid = green.grid();
        let zero = GridFunction::zeros(grid);
        let a = GridFunction::sample(grid, |_, _| 1.0);
        let r = mu1(&green, 0.0, &zero, &a, &EigenSettings::default()).unwrap();
        let p = Pencil::new(&green, 0.0, &zero, &a).unwrap();
        let dense = dense_smallest(&p);
        assert!((r.mu1 - dense).abs() < 1e-8 * dense, "{} vs {dense}", r.mu1);
        // First Dirichlet eigenvalue of the half-Laplacian on (-1, 1).
        assert!((r.mu1 - 1.1577738836977).abs() < 1e-2, "{}", r.mu1);
        let norm: f64 = r.eigvec.values.iter().zip(grid.cell_weights()).map(|(v, w)| w * v * v).sum();
        assert!((norm - 1.0).abs() < 1e-10 && r.eigvec.min() > 0.0);
    }

    #[test]
    fn potential_lowers_the_eigenvalue() {
        let s = 0.6;
        let green = setup(Geometry::Radial { dim: 2 }, s, 64);
        let profile = MembraneProfile::semi_sphere(1.0, 0.4).unwrap();
        let solver = MinimalSolver::new(&green, &profile);
        let mut prev = f64::INFINITY;
        for lambda in [0.005, 0.01, 0.02] {
            let t = solver.iterate(lambda).unwrap();
            assert!(t.status.is_solution());
            let r = mu1(&green, lambda, &t.solution, &solver.a, &EigenSettings::default()).unwrap();
            let dense = dense_smallest(&Pencil::new(&green, lambda, &t.solution, &solver.a).unwrap());
            assert!((r.mu1 - dense).abs() <= 1e-7 * dense.abs().max(1.0), "{} vs {dense}", r.mu1);
            assert!(r.mu1 < prev);
            prev = r.mu1;
        }
    }

    #[test]
    fn hardy_quotient_is_homogeneous() {
        let green = setup(Geometry::Interval, 0.5, 96);
        let phi = bump_at_distance(green.grid(), 0.1);
        let twice = GridFunction::new(green.grid(), phi.values.iter().map(|v| 2.0 * v).collect()).unwrap();
        let (a, b) = (hardy_quotient(&green, &phi), hardy_quotient(&green, &twice));
        assert!(((a - b) / a).abs() < 1e-12);
    }
}
