//! Boundary decay of minimal solutions, the sub-threshold `lambda_*`, and
//! the nonexistence probe for `gamma > 2s/3`.

use crate::error::{FracError, Result};
use crate::fit::{linear_fit, LineFit};
use crate::green::{blowup_ratio, window_nodes, BlowupReport, GreenOperator};
use crate::grid::{Geometry, GridFunction, GridSpec, RadialGrid};
use crate::operator::FracParams;
use crate::pullin::{bisect, PullInResult};
use crate::solver::{MembraneProfile, MinimalSolver, Status};

/// Upper end of the default fit window in `rho`.
pub const WINDOW_TOP: f64 = 0.05;

/// Relative tolerance of the `lambda_*` bisection.
pub const LAMBDA_SUB_TOL: f64 = 1e-2;

/// `[max(10 h_bdry, 1e-4), 0.05]`.
pub fn default_window(grid: &RadialGrid) -> (f64, f64) {
    ((10.0 * grid.boundary_cell()).max(1e-4), WINDOW_TOP)
}

/// Upper end of the asymptotic fit window.
pub const DEEP_WINDOW_TOP: f64 = 1e-4;

/// Innermost distance of grids used for decay fits.
pub const DECAY_RHO_MIN: f64 = 1e-12;

/// `[10 h_bdry, 1e-4]`, for grids graded far below `1e-4`.
pub fn asymptotic_window(grid: &RadialGrid) -> (f64, f64) {
    (10.0 * grid.boundary_cell(), DEEP_WINDOW_TOP)
}

/// A one-dimensional grid graded down to `DECAY_RHO_MIN`.
pub fn decay_grid(nodes: usize, s: f64) -> Result<RadialGrid> {
    GridSpec::for_order(Geometry::Radial { dim: 1 }, nodes, s).with_rho_min(DECAY_RHO_MIN).build()
}

/// `min{s, 2s - 2 gamma}`.
pub fn predicted_exponent(s: f64, gamma: f64) -> f64 {
    s.min(2.0 * s - 2.0 * gamma)
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub exponent: f64,
    pub log_flag: bool,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub predicted: f64,
    pub points: usize,
    /// RMS log-residual of the free power law.
    pub power_rms: f64,
    /// RMS log-residual of `C rho^s`.
    pub fixed_rms: f64,
    /// RMS log-residual of `rho^s (C ln(1/rho) + D)`.
    pub log_rms: f64,
}

impl DecayFit {
    pub fn valid(&self) -> bool {
        self.r_squared >= 0.99
    }

    pub fn within(&self, tol: f64) -> bool {
        (self.exponent - self.predicted).abs() <= tol
    }
}

fn rms_about_mean(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

/// Log-log fit of `u` against `rho` on the window, on the side `x >= 0`.
///
/// The log flag is raised when `rho^s (C ln(1/rho) + D)` with `C > 0`
/// halves the residual of both `C rho^s` and the free power law.
pub fn fit_decay(grid: &RadialGrid, u: &GridFunction, s: f64, gamma: f64, window: (f64, f64)) -> Result<DecayFit> {
    let (lo_limit, hi_limit) = (10.0 * grid.boundary_cell(), WINDOW_TOP);
    let (lo, hi) = window;
    if !(lo >= lo_limit * (1.0 - 1e-12) && hi <= hi_limit && lo < hi) {
        return Err(FracError::Domain(format!("window [{lo:e}, {hi:e}] outside [{lo_limit:e}, {hi_limit:e}]")));
    }
    let idx: Vec<usize> = window_nodes(grid, lo, hi).into_iter().filter(|&i| u.values[i] > 0.0).collect();
    if idx.len() < 5 {
        return Err(FracError::InsufficientWindow { points: idx.len(), needed: 5 });
    }
    let lr: Vec<f64> = idx.iter().map(|&i| grid.rho(i).ln()).collect();
    let lu: Vec<f64> = idx.iter().map(|&i| u.values[i].ln()).collect();
    let power: LineFit = linear_fit(&lr, &lu)?;
    let fixed: Vec<f64> = lu.iter().zip(&lr).map(|(u, r)| u - s * r).collect();
    let fixed_rms = rms_about_mean(&fixed);
    let (log_slope, log_rms) = log_model_fit(&fixed, &lr);
    Ok(DecayFit {
        exponent: power.slope,
        log_flag: log_slope > 0.0 && 2.0 * log_rms <= fixed_rms && 2.0 * log_rms <= power.rms,
        window,
        r_squared: power.r_squared,
        predicted: predicted_exponent(s, gamma),
        points: idx.len(),
        power_rms: power.rms,
        fixed_rms,
        log_rms,
    })
}

/// Fits `v = C L + D` with `L = ln(1/rho)` by relative least squares, given
/// `ln v` and `ln rho`; returns `C` and the RMS of `ln v - ln(C L + D)`.
fn log_model_fit(log_v: &[f64], log_rho: &[f64]) -> (f64, f64) {
    let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (lv, lr) in log_v.iter().zip(log_rho) {
        let (v, l) = (lv.exp(), -lr);
        let w = 1.0 / (v * v);
        s00 += w * l * l;
        s01 += w * l;
        s11 += w;
        b0 += w * l * v;
        b1 += w * v;
    }
    let det = s00 * s11 - s01 * s01;
    let c = (b0 * s11 - b1 * s01) / det;
    let d = (s00 * b1 - s01 * b0) / det;
    let res: Vec<f64> = log_v
        .iter()
        .zip(log_rho)
        .map(|(lv, lr)| {
            let m = c * (-lr) + d;
            if m > 0.0 {
                lv - m.ln()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    (c, (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt())
}

/// `max u rho^{-gamma}` over the window.
pub fn boundary_ratio(grid: &RadialGrid, u: &GridFunction, gamma: f64, window: (f64, f64)) -> f64 {
    window_nodes(grid, window.0, window.1)
        .into_iter()
        .map(|i| u.values[i] * grid.rho(i).powf(-gamma))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct LambdaSub {
    /// Midpoint of the final bracket.
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub window: (f64, f64),
}

/// Bisection on `max_window u rho^{-gamma} < kappa`.
///
/// When the predicate already holds at the lower end of the pull-in
/// bracket, `lambda_*` lies in that bracket since `lambda_* <= lambda^*`.
pub fn lambda_star_sub(solver: &MinimalSolver, pullin: &PullInResult) -> Result<LambdaSub> {
    let grid = solver.grid();
    if pullin.grid_hash != grid.hash64() {
        return Err(FracError::Domain("pull-in bracket was computed on another grid".into()));
    }
    let window = default_window(grid);
    let (kappa, gamma) = (pullin.kappa, pullin.gamma);
    if boundary_ratio(grid, &pullin.lo_solution, gamma, window) < kappa {
        let bracket = (pullin.lambda_lo, pullin.lambda_hi);
        return Ok(LambdaSub { estimate: pullin.midpoint(), bracket, window });
    }
    let mut lo = 1e-3 * pullin.lambda_lo;
    let mut start = loop {
        let run = solver.iterate(lo)?;
        if run.status.is_solution() && boundary_ratio(grid, &run.solution, gamma, window) < kappa {
            break run.solution;
        }
        lo *= 0.1;
        if lo < crate::pullin::LOWEST_LOAD {
            return Err(FracError::BracketExhausted { lowest: lo * 10.0 });
        }
    };
    let bracket = bisect(lo, pullin.lambda_lo, LAMBDA_SUB_TOL, |lambda| {
        let run = solver.iterate_from(lambda, &start.values)?;
        let ok = run.status.is_solution() && boundary_ratio(grid, &run.solution, gamma, window) < kappa;
        if ok {
            start = run.solution;
        }
        Ok(ok)
    })?;
    Ok(LambdaSub { estimate: 0.5 * (bracket.0 + bracket.1), bracket, window })
}

/// Innermost boundary distance that resolves the blow-up at load `lambda_min`.
pub fn probe_rho_min(s: f64, gamma: f64, lambda_min: f64) -> f64 {
    (1e-2 * lambda_min.powf(1.0 / (3.0 * gamma - 2.0 * s))).clamp(1e-300, 1e-8)
}

#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub lambda: f64,
    pub status: Status,
    pub iterations: usize,
    pub min_gap: f64,
    /// Boundary distance of the node with the smallest gap.
    pub min_gap_rho: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeGrid {
    pub nodes: usize,
    pub grid_hash: u64,
    pub runs: Vec<ProbeRun>,
}

#[derive(Debug, Clone)]
pub struct NonexistenceReport {
    pub s: f64,
    pub dim: usize,
    pub gamma: f64,
    pub rho_min: f64,
    /// Runs on the grid with `n` nodes and on its refinement.
    pub grids: Vec<ProbeGrid>,
    pub blowup: BlowupReport,
}

impl NonexistenceReport {
    pub fn all_fail(&self) -> bool {
        self.grids.iter().all(|g| g.runs.iter().all(|r| !r.status.is_solution()))
    }

    /// Every touchdown gap minimum lies in `rho < 0.1`.
    pub fn boundary_driven(&self) -> bool {
        self.grids
            .iter()
            .flat_map(|g| &g.runs)
            .filter(|r| r.status == Status::Touchdown)
            .all(|r| r.min_gap_rho < 0.1)
    }

    /// The first converged run, as an error.
    pub fn check(&self) -> Result<()> {
        match self.grids.iter().flat_map(|g| &g.runs).find(|r| r.status.is_solution()) {
            Some(r) => Err(FracError::ExistenceAnomaly { lambda: r.lambda, margin: r.min_gap }),
            None => Ok(()),
        }
    }
}

/// Geometric loads `10^{-1}, ..., lambda_min`, one per decade.
pub fn decade_loads(lambda_min: f64) -> Vec<f64> {
    let decades = (-lambda_min.log10()).round() as i32;
    (1..=decades.max(1)).map(|k| 10f64.powi(-k)).collect()
}

/// Runs the minimal iteration for every load on two nested graded grids.
pub fn nonexistence_report(s: f64, dim: usize, gamma: f64, kappa: f64, lambdas: &[f64], nodes: usize, probes: &[f64]) -> Result<NonexistenceReport> {
    if !(gamma > 2.0 * s / 3.0 && gamma < s) {
        return Err(FracError::Domain(format!("gamma = {gamma} outside (2s/3, s) for s = {s}")));
    }
    let lambda_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(FracError::Domain("loads must be positive".into()));
    }
    let rho_min = probe_rho_min(s, gamma, lambda_min);
    let params = FracParams::new(s, dim)?;
    let profile = MembraneProfile::semi_sphere(kappa, gamma)?;
    let mut grids = Vec::new();
    let mut blowup = None;
    for n in [nodes, 2 * nodes] {
        let grid = GridSpec::for_order(Geometry::Radial { dim }, n, s).with_rho_min(rho_min).build()?;
        profile.check_bounds(&grid)?;
        let green = GreenOperator::new(&grid, &params)?;
        let solver = MinimalSolver::new(&green, &profile);
        let mut runs = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let trace = solver.iterate(lambda)?;
            let worst = (0..grid.len())
                .min_by(|&i, &j| {
                    let gi = solver.a.values[i] - trace.solution.values[i];
                    let gj = solver.a.values[j] - trace.solution.values[j];
                    gi.total_cmp(&gj)
                })
                .unwrap_or(0);
            runs.push(ProbeRun {
                lambda,
                status: trace.status,
                iterations: trace.iterations(),
                min_gap: trace.min_gap,
                min_gap_rho: grid.rho(worst),
            });
        }
        if blowup.is_none() {
            blowup = Some(blowup_ratio(gamma, &green, probes)?);
        }
        grids.push(ProbeGrid { nodes: grid.len(), grid_hash: grid.hash64(), runs });
    }
    Ok(NonexistenceReport { s, dim, gamma, rho_min, grids, blowup: blowup.expect("two grids") })
}

pub fn nonexistence_probe(s: f64, dim: usize, gamma: f64, kappa: f64, lambdas: &[f64], nodes: usize, probes: &[f64]) -> Result<NonexistenceReport> {
    let report = nonexistence_report(s, dim, gamma, kappa, lambdas, nodes, probes)?;
    report.check()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pullin::bisect_pullin;

    fn interval(s: f64, n: usize, rho_min: f64) -> GreenOperator {
        let grid = GridSpec::for_order(Geometry::Interval, n, s).with_rho_min(rho_min).build().unwrap();
        GreenOperator::new(&grid, &FracParams::new(s, 1).unwrap()).unwrap()
    }

    #[test]
    fn exponents_and_log_flag() {
        for (s, gamma, log) in [(0.5, 0.2, false), (0.6, 0.4, false), (0.75, 0.375, true), (0.75, 0.45, false)] {
            let grid = decay_grid(96, s).unwrap();
            let green = GreenOperator::new(&grid, &FracParams::new(s, 1).unwrap()).unwrap();
            let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
            let solver = MinimalSolver::new(&green, &profile);
            let run = solver.iterate(0.01).unwrap();
            let fit = fit_decay(&grid, &run.solution, s, gamma, asymptotic_window(&grid)).unwrap();
            assert!(fit.valid() && fit.log_flag == log, "s={s} gamma={gamma}: {fit:?}");
            if !log {
                assert!(fit.within(0.05), "s={s} gamma={gamma}: {fit:?}");
            }
        }
    }

    #[test]
    fn window_outside_limits_is_rejected() {
        let green = interval(0.5, 64, 1e-7);
        let u = GridFunction::sample(green.grid(), |_, d| d.sqrt());
        assert!(fit_decay(green.grid(), &u, 0.5, 0.2, (1e-4, 0.2)).is_err());
        assert!(fit_decay(green.grid(), &u, 0.5, 0.2, (1e-9, 0.05)).is_err());
        assert!(fit_decay(green.grid(), &u, 0.5, 0.2, (1e-6, 1e-2)).is_ok());
    }

    #[test]
    fn exact_profiles_are_classified() {
        let green = interval(0.5, 128, 1e-7);
        let grid = green.grid();
        let w = default_window(grid);
        let pure = GridFunction::sample(grid, |_, d| d.powf(0.5));
        let logged = GridFunction::sample(grid, |_, d| d.powf(0.5) * (1.0 / d).ln());
        let a = fit_decay(grid, &pure, 0.5, 0.2, w).unwrap();
        let b = fit_decay(grid, &logged, 0.5, 0.25, w).unwrap();
        assert!((a.exponent - 0.5).abs() < 1e-12 && !a.log_flag);
        assert!(b.log_flag && b.log_rms < 1e-12);
    }

    #[test]
    fn sub_threshold_sits_below_the_bracket_top() {
        let (s, gamma) = (0.75, 0.3 * 0.75);
        let green = interval(s, 128, 1e-7);
        let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
        let solver = MinimalSolver::new(&green, &profile);
        let p = bisect_pullin(&solver, &profile, (0.05, 0.2), 1e-3).unwrap();
        let sub = lambda_star_sub(&solver, &p).unwrap();
        assert!(sub.estimate <= p.midpoint() && sub.bracket.1 <= p.lambda_hi);
        // A lower threshold moves the estimate strictly below the bracket.
        let mut strict = p.clone();
        strict.kappa = 0.5 * boundary_ratio(green.grid(), &p.lo_solution, gamma, default_window(green.grid()));
        let sub = lambda_star_sub(&solver, &strict).unwrap();
        assert!(sub.bracket.1 <= p.lambda_lo && (sub.bracket.1 - sub.bracket.0) <= 2.0 * LAMBDA_SUB_TOL * sub.bracket.1);
        let run = solver.iterate(sub.bracket.0).unwrap();
        assert!(boundary_ratio(green.grid(), &run.solution, gamma, sub.window) < strict.kappa);
    }

    #[test]
    fn deep_grid_sees_touchdown() {
        let r = nonexistence_report(0.75, 1, 0.6, 1.0, &[1e-2, 1e-3], 96, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(r.all_fail() && r.boundary_driven(), "{r:?}");
        assert!(r.check().is_ok());
        assert!(nonexistence_report(0.75, 1, 0.5, 1.0, &[1e-3], 96, &[1e-2]).is_err());
    }
}
