//! The pull-in voltage: bisection on the existence of a minimal solution,
//! together with the closed-form and integral bounds for the ball profile.

use crate::error::{FracError, Result};
use crate::green::GreenOperator;
use crate::grid::{GridFunction, RadialGrid};
use crate::solver::{MembraneProfile, MinimalSolver, ProfileForm};
use crate::special::beta;

/// Smallest load tried before declaring that no solution exists.
pub const LOWEST_LOAD: f64 = 1e-10;

/// Doublings of the upper end before giving up on a failing bracket.
const MAX_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullInBounds {
    /// `None` when the weighted denominator fails its refinement check.
    pub upper_general: Option<f64>,
    /// Beta-function bound; only for the semi-sphere with `gamma <= 2s/3`.
    pub upper_ball: Option<f64>,
    /// Supersolution bound; only for the semi-sphere with `gamma <= 2s/3`.
    pub lower_ball: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PullInResult {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub bounds: PullInBounds,
    pub kappa: f64,
    pub gamma: f64,
    pub s: f64,
    pub dim: usize,
    pub grid_hash: u64,
    /// Minimal solution at `lambda_lo`.
    pub lo_solution: GridFunction,
    /// Number of iterations runs spent on the bracket.
    pub evaluations: usize,
}

impl PullInResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }

    pub fn relative_width(&self) -> f64 {
        (self.lambda_hi - self.lambda_lo) / self.lambda_hi
    }

    /// Whether the two brackets are disjoint.
    pub fn separated_from(&self, other: &PullInResult) -> bool {
        self.lambda_hi < other.lambda_lo || other.lambda_hi < self.lambda_lo
    }
}

/// Bisection of a predicate that holds below a threshold and fails above it.
///
/// `lo` must satisfy the predicate and `hi` must not; stops once
/// `(hi - lo) / hi <= tol`.
pub fn bisect<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, tol: f64, mut holds: F) -> Result<(f64, f64)> {
    if !(lo < hi && tol > 0.0) {
        return Err(FracError::Domain(format!("bracket [{lo}, {hi}] with tolerance {tol}")));
    }
    while (hi - lo) / hi > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

fn semi_sphere_below_two_thirds(profile: &MembraneProfile, s: f64) -> bool {
    profile.form == ProfileForm::SemiSphere && profile.gamma <= 2.0 * s / 3.0 + 1e-12
}

/// Brackets the numeric pull-in voltage to relative width `tol`.
///
/// The bracket is widened when needed: the top doubles until a run fails,
/// the bottom drops by decades until one converges. Each trial starts from
/// the minimal solution at the current lower end.
pub fn bisect_pullin(solver: &MinimalSolver, profile: &MembraneProfile, bracket: (f64, f64), tol: f64) -> Result<PullInResult> {
    let green = solver.green;
    let params = green.params();
    let (mut lo, mut hi) = bracket;
    let mut evaluations = 0;
    let mut lo_run = loop {
        evaluations += 1;
        let run = solver.iterate(lo)?;
        if run.status.is_solution() {
            break run;
        }
        hi = lo;
        lo /= 10.0;
        if lo < LOWEST_LOAD {
            return Err(FracError::BracketExhausted { lowest: lo * 10.0 });
        }
    };
    let mut expansions = 0;
    loop {
        evaluations += 1;
        let run = solver.iterate_from(hi, &lo_run.solution.values)?;
        if !run.status.is_solution() {
            break;
        }
        lo_run = run;
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(FracError::Domain(format!("no failing load up to {hi:e}")));
        }
    }
    let (lambda_lo, lambda_hi) = bisect(lo, hi, tol, |mid| {
        evaluations += 1;
        let run = solver.iterate_from(mid, &lo_run.solution.values)?;
        let ok = run.status.is_solution();
        if ok {
            lo_run = run;
        }
        Ok(ok)
    })?;
    debug_assert_eq!(lo_run.lambda, lambda_lo);
    let bounds = PullInBounds {
        upper_general: match upper_bound_general(green, &solver.a) {
            Ok(v) => Some(v),
            Err(FracError::DivergentDenominator(_)) => None,
            Err(e) => return Err(e),
        },
        upper_ball: if semi_sphere_below_two_thirds(profile, params.s) {
            Some(upper_bound_ball(profile.kappa, profile.gamma, params.s, measured_cbar(green)?))
        } else {
            None
        },
        lower_ball: if semi_sphere_below_two_thirds(profile, params.s) {
            Some(lower_bound_ball(profile.kappa, green)?)
        } else {
            None
        },
    };
    Ok(PullInResult {
        lambda_lo,
        lambda_hi,
        bounds,
        kappa: profile.kappa,
        gamma: profile.gamma,
        s: params.s,
        dim: params.dim,
        grid_hash: green.grid().hash64(),
        lo_solution: lo_run.solution,
        evaluations,
    })
}

/// Relative change allowed when the innermost boundary layer is dropped
/// from the denominator of the general bound.
const DENOMINATOR_CAUCHY_TOL: f64 = 1e-2;

/// `int a / int G[1] a^{-2}` on the grid.
pub fn upper_bound_general(green: &GreenOperator, a: &GridFunction) -> Result<f64> {
    let grid = green.grid();
    if a.values.iter().any(|v| !(*v > 0.0)) {
        return Err(FracError::Domain("profile must be positive at every node".into()));
    }
    let torsion = green.solve(&vec![1.0; grid.len()])?;
    let integrand: Vec<f64> = torsion.iter().zip(&a.values).map(|(g, a)| g / (a * a)).collect();
    let denominator = grid.integrate(&integrand);
    let cut = 100.0 * grid.min_distance();
    let truncated: Vec<f64> = (0..grid.len())
        .map(|i| if grid.boundary_distances()[i] < cut { 0.0 } else { integrand[i] })
        .collect();
    let change = (denominator - grid.integrate(&truncated)).abs() / denominator;
    if !(change <= DENOMINATOR_CAUCHY_TOL) {
        return Err(FracError::DivergentDenominator(change));
    }
    Ok(grid.integrate(&a.values) / denominator)
}

/// `cbar_{N,s}` read off `G[1]` at the node nearest the centre.
pub fn measured_cbar(green: &GreenOperator) -> Result<f64> {
    let grid = green.grid();
    let torsion = green.solve(&vec![1.0; grid.len()])?;
    let i = centre_node(grid);
    let d = grid.boundary_distances()[i];
    Ok(torsion[i] / (d * (2.0 - d)).powf(green.params().s))
}

fn centre_node(grid: &RadialGrid) -> usize {
    let pos = grid.nodes();
    (0..pos.len()).min_by(|&i, &j| pos[i].abs().total_cmp(&pos[j].abs())).unwrap_or(0)
}

/// `kappa^3 B(1/2, gamma + 1) / (cbar B(1/2, s - 2 gamma + 1))`.
pub fn upper_bound_ball(kappa: f64, gamma: f64, s: f64, cbar: f64) -> f64 {
    kappa.powi(3) * beta(0.5, gamma + 1.0) / (cbar * beta(0.5, s - 2.0 * gamma + 1.0))
}

/// `inf (-Delta)^s[(1 - |x|^2)^{2s/3}] (1 - |x|^2)^{4s/3}` over the nodes.
pub fn supersolution_constant(green: &GreenOperator) -> Result<f64> {
    let grid = green.grid();
    let s = green.params().s;
    let w = GridFunction::sample(grid, |_, d| (d * (2.0 - d)).powf(2.0 * s / 3.0));
    let aw = green.operator().apply(&w.values);
    let cs = (0..grid.len())
        .map(|i| {
            let d = grid.boundary_distances()[i];
            aw[i] * (d * (2.0 - d)).powf(4.0 * s / 3.0)
        })
        .fold(f64::INFINITY, f64::min);
    if !(cs > 0.0) {
        return Err(FracError::NonPositiveCs(cs));
    }
    Ok(cs)
}

/// `(4/27) c_s kappa^3`, with `4/27 = max t (1 - t)^2` at `t = 1/3`.
pub fn lower_bound_ball(kappa: f64, green: &GreenOperator) -> Result<f64> {
    Ok(4.0 / 27.0 * supersolution_constant(green)? * kappa.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Holds,
    Violated,
    /// Some neighbouring brackets overlap, so the order is not resolved.
    InconclusiveOverlap,
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub kappa: f64,
    pub gamma: f64,
    pub result: PullInResult,
}

#[derive(Debug, Clone)]
pub struct MonotonicityTable {
    pub rows: Vec<ScanRow>,
    /// Midpoints decrease in `gamma` at every fixed `kappa`.
    pub decreasing_in_gamma: Trend,
    /// Midpoints increase in `kappa` at every fixed `gamma`.
    pub increasing_in_kappa: Trend,
}

fn trend(results: &[&PullInResult], increasing: bool) -> Trend {
    let mut overlap = false;
    for w in results.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ordered = if increasing { b.midpoint() > a.midpoint() } else { b.midpoint() < a.midpoint() };
        if !a.separated_from(b) {
            overlap = true;
        } else if !ordered {
            return Trend::Violated;
        }
    }
    if overlap {
        Trend::InconclusiveOverlap
    } else {
        Trend::Holds
    }
}

/// Pull-in brackets over the product of `kappas` and `gammas` on one grid.
pub fn monotonicity_scan(green: &GreenOperator, kappas: &[f64], gammas: &[f64], tol: f64) -> Result<MonotonicityTable> {
    let s = green.params().s;
    if gammas.iter().any(|&g| g > 2.0 * s / 3.0 + 1e-12) {
        return Err(FracError::Domain(format!("scan exponents must not exceed 2s/3 = {}", 2.0 * s / 3.0)));
    }
    let mut rows = Vec::new();
    for &kappa in kappas {
        for &gamma in gammas {
            let profile = MembraneProfile::semi_sphere(kappa, gamma)?;
            let solver = MinimalSolver::new(green, &profile);
            let guess = upper_bound_general(green, &solver.a)?;
            let result = bisect_pullin(&solver, &profile, (0.25 * guess, guess), tol)?;
            rows.push(ScanRow { kappa, gamma, result });
        }
    }
    let pick = |k: usize, g: usize| &rows[k * gammas.len() + g].result;
    let combine = |trends: Vec<Trend>| {
        if trends.contains(&Trend::Violated) {
            Trend::Violated
        } else if trends.contains(&Trend::InconclusiveOverlap) {
            Trend::InconclusiveOverlap
        } else {
            Trend::Holds
        }
    };
    let decreasing_in_gamma = combine(
        (0..kappas.len())
            .map(|k| trend(&(0..gammas.len()).map(|g| pick(k, g)).collect::<Vec<_>>(), false))
            .collect(),
    );
    let increasing_in_kappa = combine(
        (0..gammas.len())
            .map(|g| trend(&(0..kappas.len()).map(|k| pick(k, g)).collect::<Vec<_>>(), true))
            .collect(),
    );
    Ok(MonotonicityTable { rows, decreasing_in_gamma, increasing_in_kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, GridSpec};
    use crate::operator::FracParams;
    use crate::special::torsion_constant;

    fn interval(s: f64, n: usize) -> GreenOperator {
        let grid = GridSpec::for_order(Geometry::Interval, n, s).build().unwrap();
        GreenOperator::new(&grid, &FracParams::new(s, 1).unwrap()).unwrap()
    }

    #[test]
    fn bisection_on_a_threshold() {
        let (lo, hi) = bisect(0.0 + 1e-9, 10.0, 1e-6, |x| Ok(x < std::f64::consts::PI)).unwrap();
        assert!(lo < std::f64::consts::PI && hi >= std::f64::consts::PI && (hi - lo) / hi <= 1e-6);
    }

    #[test]
    fn half_beta_at_one_half() {
        assert!((beta(0.5, 1.5) - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn ball_bound_scaling_and_monotonicity() {
        let s = 0.75;
        let cbar = torsion_constant(1, s);
        let one = upper_bound_ball(1.0, 0.5, s, cbar);
        assert!((upper_bound_ball(2.0, 0.5, s, cbar) / one - 8.0).abs() < 1e-12);
        let values: Vec<f64> = [0.3 * s, 0.5 * s, 2.0 * s / 3.0].iter().map(|&g| upper_bound_ball(1.0, g, s, cbar)).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn general_bound_matches_beta_form_on_the_interval() {
        let s = 0.75;
        let green = interval(s, 256);
        let cbar = measured_cbar(&green).unwrap();
        assert!((cbar / torsion_constant(1, s) - 1.0).abs() < 1e-3, "{cbar}");
        for gamma in [0.2, 0.35, 0.5] {
            let profile = MembraneProfile::semi_sphere(1.0, gamma).unwrap();
            let general = upper_bound_general(&green, &profile.sample(green.grid())).unwrap();
            let ball = upper_bound_ball(1.0, gamma, s, cbar);
            assert!((general / ball - 1.0).abs() < 0.02, "gamma={gamma}: {general} vs {ball}");
            let doubled = upper_bound_general(&green, &MembraneProfile::semi_sphere(2.0, gamma).unwrap().sample(green.grid())).unwrap();
            assert!((doubled / general - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pullin_bracket_is_ordered() {
        let s = 0.75;
        let green = interval(s, 96);
        let profile = MembraneProfile::semi_sphere(1.0, 0.5).unwrap();
        let solver = MinimalSolver::new(&green, &profile);
        let r = bisect_pullin(&solver, &profile, (0.1, 1.0), 1e-3).unwrap();
        assert!(r.lambda_lo < r.lambda_hi && r.relative_width() <= 1e-3);
        assert!(r.bounds.lower_ball.unwrap() <= r.lambda_hi);
        assert!(r.lambda_lo <= 1.1 * r.bounds.upper_general.unwrap());
        let again = bisect_pullin(&solver, &profile, (0.1, 1.0), 1e-3).unwrap();
        assert_eq!((r.lambda_lo, r.lambda_hi), (again.lambda_lo, again.lambda_hi));
    }
}
