//! Minimal solutions by the monotone iteration `v_n = lambda G[(a - v_{n-1})^{-2}]`.

use crate::error::{FracError, Result};
use crate::green::GreenOperator;
use crate::grid::{GridFunction, RadialGrid};

/// Slack on the node-wise monotonicity of the iterates.
pub const MONOTONE_SLACK: f64 = 1e-13;

/// Window of recent steps inspected by the slow-convergence rule.
pub const SLOW_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileForm {
    /// `a(x) = kappa (1 - |x|^2)^gamma`.
    SemiSphere,
    /// Values `(|x|, a)` interpolated through `a / rho^gamma`.
    Tabulated(Vec<(f64, f64)>),
}

/// The membrane profile `a`, with `kappa rho^gamma <= a <= upper rho^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneProfile {
    pub kappa: f64,
    pub gamma: f64,
    pub upper: f64,
    pub form: ProfileForm,
}

impl MembraneProfile {
    pub fn semi_sphere(kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0 && gamma > 0.0 && gamma < 1.0) {
            return Err(FracError::Domain(format!("kappa = {kappa}, gamma = {gamma}")));
        }
        Ok(Self { kappa, gamma, upper: kappa * 2f64.powf(gamma), form: ProfileForm::SemiSphere })
    }

    /// A tabulated profile over `|x|` in `[0, 1)`; `kappa` and `upper` are the
    /// extreme values of `a / rho^gamma` over the table.
    pub fn tabulated(gamma: f64, mut table: Vec<(f64, f64)>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(FracError::Domain(format!("gamma = {gamma}")));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        if table.len() < 2 || table.iter().any(|&(r, a)| !(0.0..1.0).contains(&r) || !(a > 0.0)) {
            return Err(FracError::Domain("profile table needs two or more rows with 0 <= r < 1 and a > 0".into()));
        }
        let q: Vec<f64> = table.iter().map(|&(r, a)| a / clamp_rho(1.0 - r).powf(gamma)).collect();
        let kappa = q.iter().cloned().fold(f64::INFINITY, f64::min);
        let upper = q.iter().cloned().fold(0.0, f64::max);
        Ok(Self { kappa, gamma, upper, form: ProfileForm::Tabulated(table) })
    }

    /// `a` at position `x` with boundary distance `dist`.
    pub fn value(&self, x: f64, dist: f64) -> f64 {
        match &self.form {
            ProfileForm::SemiSphere => self.kappa * (dist * (2.0 - dist)).powf(self.gamma),
            ProfileForm::Tabulated(table) => {
                let r = x.abs();
                let rho = clamp_rho(dist);
                let q = |k: usize| table[k].1 / clamp_rho(1.0 - table[k].0).powf(self.gamma);
                let k = table.partition_point(|p| p.0 <= r);
                let qv = if k == 0 {
                    q(0)
                } else if k == table.len() {
                    q(k - 1)
                } else {
                    let t = (r - table[k - 1].0) / (table[k].0 - table[k - 1].0);
                    q(k - 1) + t * (q(k) - q(k - 1))
                };
                qv * rho.powf(self.gamma)
            }
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> GridFunction {
        GridFunction::sample(grid, |x, d| self.value(x, d))
    }

    /// Checks both boundary bounds at every node; the worst node on failure.
    pub fn check_bounds(&self, grid: &RadialGrid) -> Result<()> {
        let a = self.sample(grid);
        for i in 0..grid.len() {
            let p = grid.rho(i).powf(self.gamma);
            let (lo, hi) = (self.kappa * p, self.upper * p);
            let slack = 1e-12 * hi;
            if a.values[i] < lo - slack || a.values[i] > hi + slack {
                return Err(FracError::AssertionFailure {
                    node: i,
                    detail: format!("a = {:e} outside [{lo:e}, {hi:e}]", a.values[i]),
                });
            }
        }
        Ok(())
    }
}

fn clamp_rho(dist: f64) -> f64 {
    dist.min(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub touch_eps: f64,
    pub step_tol: f64,
    pub res_tol: f64,
    pub max_iter: usize,
}

impl Tolerances {
    /// Defaults relative to `max a`.
    pub fn relative_to(max_a: f64) -> Self {
        Self { touch_eps: 1e-10 * max_a, step_tol: 1e-11 * max_a, res_tol: 1e-8 * max_a, max_iter: 20000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Hit the iteration cap while still creeping up monotonically.
    SlowConverging,
    Touchdown,
    MaxIter,
}

impl Status {
    /// Whether the run counts as a solution for bisection purposes.
    pub fn is_solution(self) -> bool {
        matches!(self, Status::Converged | Status::SlowConverging)
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::SlowConverging => "SlowConverging",
            Status::Touchdown => "Touchdown",
            Status::MaxIter => "MaxIter",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub lambda: f64,
    pub status: Status,
    pub iterates_sup_diff: Vec<f64>,
    pub solution: GridFunction,
    pub residual: f64,
    pub min_gap: f64,
    /// Smallest node-wise increment `v_{n+1} - v_n` over the run.
    pub min_increment: f64,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.iterates_sup_diff.len()
    }

    pub fn monotone(&self) -> bool {
        self.min_increment >= -MONOTONE_SLACK
    }
}

/// Monotone iteration against a factorised Green operator and a sampled profile.
#[derive(Debug)]
pub struct MinimalSolver<'g> {
    pub green: &'g GreenOperator,
    pub a: GridFunction,
    pub tols: Tolerances,
}

impl<'g> MinimalSolver<'g> {
    pub fn new(green: &'g GreenOperator, profile: &MembraneProfile) -> Self {
        let a = profile.sample(green.grid());
        let tols = Tolerances::relative_to(a.max());
        Self { green, a, tols }
    }

    pub fn with_tolerances(mut self, tols: Tolerances) -> Self {
        self.tols = tols;
        self
    }

    pub fn grid(&self) -> &RadialGrid {
        self.green.grid()
    }

    /// `touch_eps` per unit height of `a`; the gap threshold at a node scales
    /// with the local value of `a`.
    fn touch_rate(&self) -> f64 {
        self.tols.touch_eps / self.a.max()
    }

    /// `G[(a - v)^{-2}]`, or `None` when the gap closes below its threshold.
    fn load(&self, v: &[f64]) -> Result<Option<Vec<f64>>> {
        let rate = self.touch_rate();
        let mut f = Vec::with_capacity(v.len());
        for (&a, v) in self.a.values.iter().zip(v) {
            let gap = a - v;
            if gap <= rate * a {
                return Ok(None);
            }
            f.push(gap.powi(-2));
        }
        self.green.solve(&f).map(Some)
    }

    fn min_gap(&self, v: &[f64]) -> f64 {
        self.a.values.iter().zip(v).map(|(a, v)| a - v).fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm of `u - lambda G[(a - u)^{-2}]`; infinite if the gap has closed.
    pub fn residual(&self, lambda: f64, u: &[f64]) -> Result<f64> {
        Ok(match self.load(u)? {
            Some(g) => u.iter().zip(&g).map(|(u, g)| (u - lambda * g).abs()).fold(0.0, f64::max),
            None => f64::INFINITY,
        })
    }

    /// The iteration from `v_0 = 0`.
    pub fn iterate(&self, lambda: f64) -> Result<IterationTrace> {
        self.iterate_from(lambda, &vec![0.0; self.a.len()])
    }

    /// The iteration from a start below the minimal solution, such as a
    /// converged solution at a smaller load.
    pub fn iterate_from(&self, lambda: f64, start: &[f64]) -> Result<IterationTrace> {
        if !(lambda >= 0.0) {
            return Err(FracError::Domain(format!("lambda = {lambda}")));
        }
        let grid = self.grid();
        let mut v = start.to_vec();
        let mut diffs = Vec::new();
        let mut min_increment = f64::INFINITY;
        let mut status = Status::MaxIter;
        for n in 0..self.tols.max_iter {
            let Some(g) = self.load(&v)? else {
                status = Status::Touchdown;
                break;
            };
            let mut sup = 0.0f64;
            for (vi, gi) in v.iter_mut().zip(&g) {
                let next = lambda * gi;
                if !next.is_finite() {
                    return Err(FracError::NanIterate { iteration: n + 1 });
                }
                let step = next - *vi;
                sup = sup.max(step.abs());
                min_increment = min_increment.min(step);
                *vi = next;
            }
            diffs.push(sup);
            if sup <= self.tols.step_tol {
                status = Status::Converged;
                break;
            }
        }
        let min_gap = self.min_gap(&v);
        let rate = self.touch_rate();
        let closed = self.a.values.iter().zip(&v).any(|(&a, v)| a - v <= rate * a);
        if closed {
            status = Status::Touchdown;
        }
        let residual = if status == Status::Touchdown { f64::INFINITY } else { self.residual(lambda, &v)? };
        if status == Status::MaxIter && min_gap > 0.0 && slowly_converging(&diffs, min_increment) {
            status = Status::SlowConverging;
        }
        if status == Status::Converged && residual > self.tols.res_tol {
            status = Status::MaxIter;
        }
        Ok(IterationTrace {
            lambda,
            status,
            iterates_sup_diff: diffs,
            solution: GridFunction::new(grid, v)?,
            residual,
            min_gap,
            min_increment: if min_increment.is_finite() { min_increment } else { 0.0 },
        })
    }

    /// `G[a^{-2}]`.
    pub fn first_iterate_direction(&self) -> Result<Vec<f64>> {
        let f: Vec<f64> = self.a.values.iter().map(|a| a.powi(-2)).collect();
        self.green.solve(&f)
    }
}

fn slowly_converging(diffs: &[f64], min_increment: f64) -> bool {
    if diffs.len() < SLOW_WINDOW || min_increment < -MONOTONE_SLACK {
        return false;
    }
    let tail = &diffs[diffs.len() - SLOW_WINDOW..];
    tail.windows(2).all(|w| w[1] <= w[0])
}

/// Worst margin of `u2 - u1 >= (lambda2 - lambda1) G[a^{-2}] - slack`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Smallest `u2 - u1 - (lambda2 - lambda1) G[a^{-2}]` over the nodes.
    pub worst_margin: f64,
    pub worst_node: usize,
    pub slack: f64,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= -self.slack
    }
}

pub fn monotone_gap_check(solver: &MinimalSolver, low: &IterationTrace, high: &IterationTrace) -> Result<GapReport> {
    if !(low.lambda <= high.lambda) {
        return Err(FracError::Domain(format!("loads out of order: {} > {}", low.lambda, high.lambda)));
    }
    if !(low.status.is_solution() && high.status.is_solution()) {
        return Err(FracError::Domain("both runs must have converged".into()));
    }
    let direction = solver.first_iterate_direction()?;
    let dl = high.lambda - low.lambda;
    let slack = 10.0 * solver.tols.res_tol;
    let (mut worst_margin, mut worst_node) = (f64::INFINITY, 0);
    for i in 0..direction.len() {
        let m = high.solution.values[i] - low.solution.values[i] - dl * direction[i];
        if m < worst_margin {
            worst_margin = m;
            worst_node = i;
        }
    }
    let report = GapReport { worst_margin, worst_node, slack };
    if !report.holds() {
        return Err(FracError::AssertionFailure {
            node: worst_node,
            detail: format!("gap falls short of the first-order bound by {:e}", -worst_margin),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// `u^T S u` with `S` the symmetrised operator form.
    pub dirichlet: f64,
    /// `sum_i w_i u_i / (a_i - u_i)^2`.
    pub reaction: f64,
}

impl Energy {
    /// `|dirichlet - lambda reaction| / dirichlet`, zero for the trivial solution.
    pub fn identity_defect(&self, lambda: f64) -> f64 {
        if self.dirichlet == 0.0 && self.reaction == 0.0 {
            return 0.0;
        }
        (self.dirichlet - lambda * self.reaction).abs() / self.dirichlet.abs().max(lambda * self.reaction.abs())
    }
}

pub fn energy(green: &GreenOperator, u: &GridFunction, a: &GridFunction) -> Result<Energy> {
    let op = green.operator();
    let w = green.grid().cell_weights();
    let au = op.apply(&u.values);
    // u^T (W A + A^T W) u / 2 = u^T W A u.
    let dirichlet: f64 = (0..u.len()).map(|i| w[i] * u.values[i] * au[i]).sum();
    let reaction: f64 = (0..u.len()).map(|i| w[i] * u.values[i] / (a.values[i] - u.values[i]).powi(2)).sum();
    if !(dirichlet.is_finite() && reaction.is_finite()) {
        return Err(FracError::NonFiniteEnergy);
    }
    Ok(Energy { dirichlet, reaction })
}

/// Worst margin of `A w >= lambda / (a - w)^2`, relative to the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupersolutionReport {
    /// Smallest `A w (a - w)^2 / lambda - 1` over the nodes.
    pub worst_margin: f64,
    pub worst_node: usize,
    pub slack: f64,
}

impl SupersolutionReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= -self.slack
    }
}

/// Whether `A w >= (1 - slack) lambda / (a - w)^2` at every node, `0 < w < a`.
pub fn supersolution_check(green: &GreenOperator, w: &GridFunction, lambda: f64, a: &GridFunction, slack: f64) -> SupersolutionReport {
    let aw = green.operator().apply(&w.values);
    let (mut worst_margin, mut worst_node) = (f64::INFINITY, 0);
    for i in 0..w.len() {
        let gap = a.values[i] - w.values[i];
        let m = if gap > 0.0 && w.values[i] > 0.0 { aw[i] * gap * gap / lambda - 1.0 } else { f64::NEG_INFINITY };
        if m < worst_margin {
            worst_margin = m;
            worst_node = i;
        }
    }
    SupersolutionReport { worst_margin, worst_node, slack }
}

/// `w_t = t kappa (1 - |x|^2)^{2s/3}`.
pub fn power_supersolution(grid: &RadialGrid, t: f64, kappa: f64, s: f64) -> GridFunction {
    GridFunction::sample(grid, |_, d| t * kappa * (d * (2.0 - d)).powf(2.0 * s / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, GridSpec};
    use crate::operator::FracParams;

    fn setup(s: f64, gamma: f64, n: usize) -> (GreenOperator, MembraneProfile) {
        let grid = GridSpec::for_order(Geometry::Interval, n, s).build().unwrap();
        let params = FracParams::new(s, 1).unwrap();
        (GreenOperator::new(&grid, &params).unwrap(), MembraneProfile::semi_sphere(1.0, gamma).unwrap())
    }

    #[test]
    fn semi_sphere_respects_both_bounds() {
        let grid = GridSpec::for_order(Geometry::Radial { dim: 2 }, 64, 0.5).build().unwrap();
        for gamma in [0.1, 0.33, 0.5] {
            MembraneProfile::semi_sphere(1.7, gamma).unwrap().check_bounds(&grid).unwrap();
        }
    }

    #[test]
    fn tabulated_profile_reproduces_semi_sphere() {
        let grid = GridSpec::for_order(Geometry::Interval, 64, 0.5).build().unwrap();
        let exact = MembraneProfile::semi_sphere(1.0, 0.3).unwrap();
        let table: Vec<(f64, f64)> = (0..400).map(|k| k as f64 / 400.0).map(|r| (r, exact.value(r, 1.0 - r))).collect();
        let tab = MembraneProfile::tabulated(0.3, table).unwrap();
        tab.check_bounds(&grid).unwrap();
        let (a, b) = (exact.sample(&grid), tab.sample(&grid));
        for i in 0..grid.len() {
            assert!(((a.values[i] - b.values[i]) / a.values[i]).abs() < 1e-3, "node {i}");
        }
    }

    #[test]
    fn zero_load_gives_zero() {
        let (green, profile) = setup(0.5, 1.0 / 3.0, 64);
        let t = MinimalSolver::new(&green, &profile).iterate(0.0).unwrap();
        assert_eq!(t.status, Status::Converged);
        assert!(t.solution.sup_norm() == 0.0);
    }

    #[test]
    fn small_load_matches_first_iterate() {
        let (green, profile) = setup(0.5, 1.0 / 3.0, 64);
        let solver = MinimalSolver::new(&green, &profile);
        let g = solver.first_iterate_direction().unwrap();
        let scaled: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&lambda| {
                let t = solver.iterate(lambda).unwrap();
                assert_eq!(t.status, Status::Converged);
                assert!(t.monotone() && t.residual <= solver.tols.res_tol);
                let dev = t.solution.values.iter().zip(&g).map(|(u, g)| (u - lambda * g).abs()).fold(0.0, f64::max);
                dev / t.solution.sup_norm() / lambda
            })
            .collect();
        // The relative deviation divided by lambda settles to a constant.
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 1.2, "{scaled:?}");
    }

    #[test]
    fn huge_load_touches_down() {
        let (green, profile) = setup(0.5, 1.0 / 3.0, 64);
        let t = MinimalSolver::new(&green, &profile).iterate(1e3).unwrap();
        assert_eq!(t.status, Status::Touchdown);
    }

    #[test]
    fn energy_identity_and_supersolution_of_itself() {
        let (green, profile) = setup(0.6, 0.4, 96);
        let solver = MinimalSolver::new(&green, &profile);
        let t = solver.iterate(0.05).unwrap();
        assert_eq!(t.status, Status::Converged);
        let e = energy(&green, &t.solution, &solver.a).unwrap();
        assert!(e.identity_defect(0.05) < 1e-6, "{e:?}");
        let r = supersolution_check(&green, &t.solution, 0.05, &solver.a, 1e-6);
        assert!(r.holds() && r.worst_margin.abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn warm_start_reaches_the_same_solution() {
        let (green, profile) = setup(0.5, 1.0 / 3.0, 64);
        let solver = MinimalSolver::new(&green, &profile);
        let low = solver.iterate(0.02).unwrap();
        let cold = solver.iterate(0.04).unwrap();
        let warm = solver.iterate_from(0.04, &low.solution.values).unwrap();
        assert!(warm.iterations() <= cold.iterations());
        let diff = cold.solution.values.iter().zip(&warm.solution.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        monotone_gap_check(&solver, &low, &cold).unwrap();
    }
}
